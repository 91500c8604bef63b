#include "fedboost/fed/orchestrator.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "fedboost/fed/transport.hpp"

namespace fedboost::fed {

void FedConfig::validate() const {
  if (num_clients < 1) throw ConfigError("federation needs num_clients >= 1");
  if (num_rounds < 1) throw ConfigError("federation needs num_rounds >= 1");
  if (!(round_timeout_s > 0.0)) throw ConfigError("round_timeout_s must be > 0");
  train_config.validate();
  if (transport == TransportKind::tcp) parse_address(listen_address);
}

ClientUpdate InProcessClient::collect_update(std::int64_t round) {
  if (pending_round_ != round)
    throw ProtocolError(ProtocolCode::round_mismatch,
                        "client " + std::to_string(ctx_.client_id) + " has no broadcast for round " +
                            std::to_string(round));
  return client_round(ctx_, round, pending_model_);
}

void TcpClientHandle::send_global(std::int64_t round, const gbt::Ensemble&,
                                  const std::string& model_bytes) {
  // Spliced by hand so the already-serialized model is not re-encoded; the
  // result is byte-identical to encode_message with a GlobalModelBody (same
  // key order, compact dump), which a unit test pins.
  std::string payload = "{\"msg_type\":\"global_model\",\"protocol_version\":";
  payload += std::to_string(kProtocolVersion);
  payload += ",\"round\":";
  payload += std::to_string(round);
  payload += ",\"model\":";
  payload += model_bytes;
  payload += "}";
  socket_.send_frame(payload);
}

ClientUpdate TcpClientHandle::collect_update(std::int64_t round) {
  const std::string who = "client " + std::to_string(client_id_);
  std::string frame;
  try {
    frame = socket_.recv_frame(timeout_s_);
  } catch (const ProtocolError& e) {
    throw ProtocolError(e.code(), who + ": " + e.what());
  }

  Message message;
  try {
    message = decode_message(frame);
  } catch (const Error& e) {
    throw ProtocolError(ProtocolCode::bad_message_type, who + " sent a malformed update: " + e.what());
  }

  const auto* body = std::get_if<ClientUpdateBody>(&message.body);
  if (body == nullptr) {
    if (const auto* err = std::get_if<ErrorBody>(&message.body))
      throw ProtocolError(ProtocolCode::remote_error,
                          who + " reported error [" + err->code + "]: " + err->detail);
    throw ProtocolError(ProtocolCode::bad_message_type,
                        who + " sent '" + msg_type_name(message) + "', expected client_update");
  }
  if (message.round != round)
    throw ProtocolError(ProtocolCode::round_mismatch,
                        who + " answered for round " + std::to_string(message.round) +
                            " during round " + std::to_string(round));
  if (body->update.client_id != client_id_)
    throw ProtocolError(ProtocolCode::bad_message_type,
                        who + " claimed client_id " + std::to_string(body->update.client_id));
  return body->update;
}

void TcpClientHandle::finish_round(std::int64_t round, std::int64_t global_tree_count) {
  socket_.send_frame(encode_message(Message{round, RoundDoneBody{global_tree_count}}));
}

void TcpClientHandle::report_error(const std::string& code, const std::string& detail) {
  try {
    socket_.send_frame(encode_message(Message{0, ErrorBody{code, detail}}));
  } catch (...) {
    // best effort only
  }
}

gbt::Ensemble aggregate(gbt::Ensemble global, std::vector<ClientUpdate> updates) {
  if (updates.empty())
    throw AggregationError(AggregationCode::empty_update, "aggregate: no client updates");

  std::sort(updates.begin(), updates.end(),
            [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });

  const std::int64_t round = updates.front().round;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const ClientUpdate& u = updates[i];
    if (i > 0 && u.client_id == updates[i - 1].client_id)
      throw AggregationError(AggregationCode::duplicate_client,
                             "aggregate: duplicate update from client " +
                                 std::to_string(u.client_id));
    if (u.round != round)
      throw AggregationError(AggregationCode::round_mismatch,
                             "aggregate: client " + std::to_string(u.client_id) +
                                 " sent round " + std::to_string(u.round) + ", expected " +
                                 std::to_string(round));
    if (u.trees.empty())
      throw AggregationError(AggregationCode::empty_update,
                             "aggregate: client " + std::to_string(u.client_id) +
                                 " contributed zero trees");
  }

  std::vector<gbt::DecisionTree> round_trees;
  for (ClientUpdate& u : updates)
    for (gbt::DecisionTree& tree : u.trees) round_trees.push_back(std::move(tree));
  global.append_round(std::move(round_trees));
  return global;
}

RoundLog run_round(std::int64_t round, gbt::Ensemble& global,
                   std::span<const std::unique_ptr<ClientHandle>> clients, bool weighted_metrics) {
  const std::string model_bytes = gbt::serialize(global);
  for (const auto& client : clients) client->send_global(round, global, model_bytes);

  std::vector<ClientUpdate> updates;
  updates.reserve(clients.size());
  for (const auto& client : clients) {
    ClientUpdate update = client->collect_update(round);
    if (update.round != round)
      throw ProtocolError(ProtocolCode::round_mismatch,
                          "client " + std::to_string(client->client_id()) +
                              " update carries round " + std::to_string(update.round));
    updates.push_back(std::move(update));
  }

  RoundLog log;
  log.round = round;
  log.client_reports.resize(clients.size());
  std::vector<metrics::MetricsReport> reports;
  for (const ClientUpdate& u : updates) {
    if (u.client_id < 0 || static_cast<std::size_t>(u.client_id) >= clients.size())
      throw ProtocolError(ProtocolCode::bad_message_type,
                          "update from unknown client " + std::to_string(u.client_id));
    log.client_reports[static_cast<std::size_t>(u.client_id)] = u.eval_report;
    reports.push_back(u.eval_report);
  }
  log.aggregated = metrics::mean_reports(reports, weighted_metrics);

  global = aggregate(std::move(global), std::move(updates));
  log.global_tree_count = static_cast<std::int64_t>(global.tree_count());

  for (const auto& client : clients) client->finish_round(round, log.global_tree_count);
  return log;
}

namespace {

gbt::Ensemble initial_global(const FedConfig& config, std::span<const data::ClientSplit> splits) {
  if (static_cast<std::size_t>(config.num_clients) != splits.size())
    throw ConfigError("federation config expects " + std::to_string(config.num_clients) +
                      " clients but " + std::to_string(splits.size()) + " splits were provided");
  for (std::size_t k = 0; k < splits.size(); ++k) {
    if (splits[k].train.size() == 0 || splits[k].test.size() == 0)
      throw ConfigError("client " + std::to_string(k) + " has an empty train or test split");
    if (splits[k].train.feature_names != splits[0].train.feature_names)
      throw ConfigError("clients disagree on feature names");
  }
  gbt::Ensemble global;
  global.base_score = config.base_score;
  global.feature_names = splits[0].train.feature_names;
  return global;
}

FederationResult run_rounds(const FedConfig& config, gbt::Ensemble global,
                            std::span<const std::unique_ptr<ClientHandle>> clients) {
  FederationResult result;
  for (std::int64_t round = 1; round <= config.num_rounds; ++round) {
    result.logs.push_back(run_round(round, global, clients, config.weighted_metrics));
    log_info("round " + std::to_string(round) + "/" + std::to_string(config.num_rounds) +
             ": trees=" + std::to_string(result.logs.back().global_tree_count) +
             " aggregated mae=" + real_to_string(result.logs.back().aggregated.mae));
  }
  result.model = std::move(global);
  return result;
}

FederationResult run_in_process(const FedConfig& config, std::span<const data::ClientSplit> splits) {
  gbt::Ensemble global = initial_global(config, splits);
  std::vector<std::unique_ptr<ClientHandle>> clients;
  for (std::size_t k = 0; k < splits.size(); ++k) {
    ClientContext ctx{static_cast<std::int32_t>(k), splits[k].train, splits[k].test,
                      config.train_config};
    clients.push_back(std::make_unique<InProcessClient>(std::move(ctx)));
  }
  return run_rounds(config, std::move(global), clients);
}

FederationResult run_tcp(const FedConfig& config, std::span<const data::ClientSplit> splits) {
  gbt::Ensemble global = initial_global(config, splits);

  Listener listener(config.listen_address);
  auto [host, _] = parse_address(config.listen_address);
  if (host == "0.0.0.0") host = "127.0.0.1";  // loopback clients in the harness

  const std::size_t count = splits.size();
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> client_errors(count);
  threads.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    threads.emplace_back([&, k, host = host] {
      try {
        ClientContext ctx{static_cast<std::int32_t>(k), splits[k].train, splits[k].test,
                          config.train_config};
        run_tcp_client(host, listener.port(), ctx);
      } catch (...) {
        client_errors[k] = std::current_exception();
      }
    });
  }

  std::vector<std::unique_ptr<ClientHandle>> clients;
  auto shutdown = [&](const char* code, const std::string& detail) {
    for (const auto& c : clients) c->report_error(code, detail);
    clients.clear();  // closes sockets, unblocking client threads
    for (auto& t : threads) t.join();
  };

  FederationResult result;
  try {
    std::vector<bool> seen(count, false);
    for (std::size_t i = 0; i < count; ++i) {
      Socket socket = listener.accept(config.round_timeout_s);
      const Message hello = decode_message(socket.recv_frame(config.round_timeout_s));
      const auto* body = std::get_if<HelloBody>(&hello.body);
      if (body == nullptr)
        throw ProtocolError(ProtocolCode::bad_message_type,
                            "expected hello, got '" + msg_type_name(hello) + "'");
      if (body->client_id < 0 || static_cast<std::size_t>(body->client_id) >= count)
        throw ProtocolError(ProtocolCode::bad_message_type,
                            "hello from unknown client " + std::to_string(body->client_id));
      if (seen[static_cast<std::size_t>(body->client_id)])
        throw ProtocolError(ProtocolCode::bad_message_type,
                            "duplicate hello from client " + std::to_string(body->client_id));
      seen[static_cast<std::size_t>(body->client_id)] = true;
      clients.push_back(std::make_unique<TcpClientHandle>(std::move(socket), body->client_id,
                                                          config.round_timeout_s));
    }
    std::sort(clients.begin(), clients.end(),
              [](const auto& a, const auto& b) { return a->client_id() < b->client_id(); });

    result = run_rounds(config, std::move(global), clients);
  } catch (const Error& e) {
    shutdown("federation_aborted", e.what());
    throw;
  } catch (...) {
    shutdown("federation_aborted", "internal failure");
    throw;
  }

  // Orderly end: closing the connections is the end-of-federation signal.
  clients.clear();
  for (auto& t : threads) t.join();
  for (const auto& err : client_errors)
    if (err) std::rethrow_exception(err);
  return result;
}

}  // namespace

FederationResult run_federation(const FedConfig& config,
                                std::span<const data::ClientSplit> splits) {
  config.validate();
  if (config.transport == TransportKind::tcp) return run_tcp(config, splits);
  return run_in_process(config, splits);
}

FederationResult run_federation_to_file(const FedConfig& config,
                                        std::span<const data::ClientSplit> splits,
                                        const std::filesystem::path& model_path) {
  FederationResult result = run_federation(config, splits);
  gbt::write_model_file(result.model, model_path);
  return result;
}

}  // namespace fedboost::fed
