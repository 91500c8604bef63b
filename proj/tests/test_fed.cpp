#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <sys/socket.h>
#include <unistd.h>

#include <random>
#include <set>

#include "fedboost/data/synthetic.hpp"
#include "fedboost/fed/orchestrator.hpp"
#include "test_util.hpp"

using namespace fedboost;
using fed::ClientUpdate;
using gbt::DecisionTree;
using gbt::Ensemble;

namespace {

DecisionTree leaf_tree(double weight, std::int64_t tag) {
  DecisionTree t;
  t.iteration_tag = tag;
  t.nodes.resize(1);
  t.nodes[0].node_id = 0;
  t.nodes[0].kind = gbt::TreeNode::Kind::leaf;
  t.nodes[0].leaf_weight = weight;
  return t;
}

ClientUpdate make_update(std::int32_t client, std::int64_t round, std::size_t n_trees) {
  ClientUpdate u;
  u.client_id = client;
  u.round = round;
  for (std::size_t t = 0; t < n_trees; ++t)
    u.trees.push_back(leaf_tree(0.01 * static_cast<double>(t + 1), round - 1));
  u.train_sample_count = 10;
  u.eval_report.mae = 1.0;
  u.eval_report.mse = 2.0;
  u.eval_report.rmse = std::sqrt(2.0);
  u.eval_report.n = 5;
  return u;
}

Ensemble empty_global(std::size_t n_features = 2) {
  Ensemble g;
  for (std::size_t f = 0; f < n_features; ++f) g.feature_names.push_back("f" + std::to_string(f));
  return g;
}

data::Dataset small_synthetic(std::int64_t per_level, std::int64_t seed = 3) {
  data::SyntheticSpec spec;
  spec.seed = seed;
  spec.node_types = {
      {.name = "a", .idle_watts = 45, .max_watts = 180, .curvature = 1.3, .noise_sd = 2.0,
       .samples_per_level = {per_level}},
      {.name = "b", .idle_watts = 70, .max_watts = 260, .curvature = 0.9, .noise_sd = 2.0,
       .samples_per_level = {per_level}},
      {.name = "c", .idle_watts = 95, .max_watts = 310, .curvature = 1.6, .noise_sd = 2.0,
       .samples_per_level = {per_level}},
  };
  return data::gen_synthetic(spec);
}

}  // namespace

// ---------------------------------------------------------------------------
// aggregate
// ---------------------------------------------------------------------------

TEST_CASE("aggregate: three clients of 100 trees onto an empty global") {
  std::vector<ClientUpdate> updates = {make_update(2, 1, 100), make_update(0, 1, 100),
                                       make_update(1, 1, 100)};
  const Ensemble global = fed::aggregate(empty_global(), std::move(updates));
  CHECK(global.tree_count() == 300);
  CHECK(global.iteration_boundaries == std::vector<std::int64_t>{0});
  for (std::size_t i = 0; i < 300; ++i)
    CHECK(global.trees[i].tree_id == static_cast<std::int64_t>(i));
  // Canonical client order: client 0's first tree leads even though client 2
  // was listed first.
  CHECK(global.trees[0].nodes[0].leaf_weight == 0.01);
}

TEST_CASE("aggregate: one update of 100 trees onto a 300-tree global") {
  Ensemble global = fed::aggregate(
      empty_global(), {make_update(0, 1, 100), make_update(1, 1, 100), make_update(2, 1, 100)});
  std::vector<ClientUpdate> next = {make_update(0, 2, 100)};
  global = fed::aggregate(std::move(global), std::move(next));
  CHECK(global.tree_count() == 400);
  CHECK(global.iteration_boundaries == std::vector<std::int64_t>{0, 300});
  std::set<std::int64_t> ids;
  for (const auto& t : global.trees) ids.insert(t.tree_id);
  CHECK(ids.size() == 400);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == 399);
}

TEST_CASE("aggregate: per-case errors") {
  SUBCASE("duplicate client") {
    try {
      static_cast<void>(fed::aggregate(empty_global(), {make_update(1, 1, 3), make_update(1, 1, 4)}));
      FAIL("expected AggregationError");
    } catch (const AggregationError& e) {
      CHECK(e.code() == AggregationCode::duplicate_client);
    }
  }
  SUBCASE("round mismatch") {
    try {
      static_cast<void>(fed::aggregate(empty_global(), {make_update(0, 1, 3), make_update(1, 2, 3)}));
      FAIL("expected AggregationError");
    } catch (const AggregationError& e) {
      CHECK(e.code() == AggregationCode::round_mismatch);
    }
  }
  SUBCASE("zero trees") {
    try {
      static_cast<void>(fed::aggregate(empty_global(), {make_update(0, 1, 0)}));
      FAIL("expected AggregationError");
    } catch (const AggregationError& e) {
      CHECK(e.code() == AggregationCode::empty_update);
    }
  }
}

TEST_CASE("aggregate: five random rounds match the running-sum oracle") {
  std::mt19937_64 rng(404);
  Ensemble global = empty_global();
  std::int64_t oracle_total = 0;  // independent running sum
  std::vector<std::int64_t> oracle_boundaries;

  for (std::int64_t round = 1; round <= 5; ++round) {
    std::vector<ClientUpdate> updates;
    oracle_boundaries.push_back(oracle_total);
    for (std::int32_t k = 0; k < 3; ++k) {
      const std::size_t count = 5 + static_cast<std::size_t>(rng() % 16);  // 5..20
      oracle_total += static_cast<std::int64_t>(count);
      updates.push_back(make_update(k, round, count));
    }
    global = fed::aggregate(std::move(global), std::move(updates));
  }

  CHECK(static_cast<std::int64_t>(global.tree_count()) == oracle_total);
  CHECK(global.iteration_boundaries == oracle_boundaries);
  std::set<std::int64_t> ids;
  for (const auto& t : global.trees) ids.insert(t.tree_id);
  CHECK(static_cast<std::int64_t>(ids.size()) == oracle_total);
  CHECK(*ids.begin() == 0);
  CHECK(*ids.rbegin() == oracle_total - 1);
  CHECK_NOTHROW(gbt::validate_ensemble(global));
}

// ---------------------------------------------------------------------------
// run_round / run_federation
// ---------------------------------------------------------------------------

TEST_CASE("one-client equivalence: K=1 R=1 federation equals centralized train_local") {
  const data::Dataset dataset =
      data::select_feature_group(data::min_idle_isolate(small_synthetic(6)),
                                 data::FeatureGroup::bpf_only, data::default_bpf_whitelist());
  data::PartitionPlan plan;
  plan.num_clients = 1;
  plan.test_fraction = 0.2;
  plan.split_seed = 1;
  const auto splits = data::partition(dataset, plan);

  fed::FedConfig config;
  config.num_clients = 1;
  config.num_rounds = 1;
  config.train_config.n_estimators = 40;
  config.train_config.learning_rate = 0.05;
  const fed::FederationResult result = fed::run_federation(config, splits);

  Ensemble start;
  start.base_score = config.base_score;
  start.feature_names = splits[0].train.feature_names;
  Ensemble centralized = start;
  centralized.append_round(gbt::train_local(start, splits[0].train, config.train_config));

  CHECK(gbt::serialize(result.model) == gbt::serialize(centralized));  // byte-identical
}

TEST_CASE("full protocol run: K=3 R=10 with 100 trees per client gives T=3000") {
  const data::Dataset dataset = data::min_idle_isolate(small_synthetic(2));
  data::PartitionPlan plan;
  plan.num_clients = 3;
  plan.test_fraction = 0.2;
  plan.split_seed = 7;
  const auto splits = data::partition(dataset, plan);

  fed::FedConfig config;
  config.num_clients = 3;
  config.num_rounds = 10;
  config.train_config.n_estimators = 100;
  config.train_config.max_depth = 3;
  const fed::FederationResult result = fed::run_federation(config, splits);

  CHECK(result.model.tree_count() == 3000);
  const std::vector<std::int64_t> expected_boundaries = {0,    300,  600,  900,  1200,
                                                         1500, 1800, 2100, 2400, 2700};
  CHECK(result.model.iteration_boundaries == expected_boundaries);

  REQUIRE(result.logs.size() == 10);
  std::int64_t previous = 0;
  for (const auto& log : result.logs) {
    CHECK(log.global_tree_count > previous);  // strictly increasing
    previous = log.global_tree_count;
    CHECK(log.client_reports.size() == 3);
  }
  CHECK_NOTHROW(gbt::validate_ensemble(result.model));
}

TEST_CASE("federation determinism: same inputs, identical logs and model") {
  const data::Dataset dataset = data::min_idle_isolate(small_synthetic(3));
  data::PartitionPlan plan;
  plan.num_clients = 3;
  plan.test_fraction = 0.25;
  plan.split_seed = 11;
  const auto splits = data::partition(dataset, plan);

  fed::FedConfig config;
  config.num_clients = 3;
  config.num_rounds = 4;
  config.train_config.n_estimators = 8;
  config.train_config.learning_rate = 0.1;

  const auto a = fed::run_federation(config, splits);
  const auto b = fed::run_federation(config, splits);
  CHECK(gbt::serialize(a.model) == gbt::serialize(b.model));
  REQUIRE(a.logs.size() == b.logs.size());
  for (std::size_t r = 0; r < a.logs.size(); ++r) {
    CHECK(a.logs[r].aggregated == b.logs[r].aggregated);
    CHECK(a.logs[r].client_reports == b.logs[r].client_reports);
  }
}

TEST_CASE("cross-transport identity: tcp equals in-process byte for byte") {
  const data::Dataset dataset = data::min_idle_isolate(small_synthetic(3, /*seed=*/9));
  data::PartitionPlan plan;
  plan.num_clients = 3;
  plan.test_fraction = 0.25;
  plan.split_seed = 5;
  const auto splits = data::partition(dataset, plan);

  fed::FedConfig config;
  config.num_clients = 3;
  config.num_rounds = 3;
  config.train_config.n_estimators = 6;
  config.train_config.learning_rate = 0.1;

  const auto in_process = fed::run_federation(config, splits);

  config.transport = fed::TransportKind::tcp;
  config.listen_address = "127.0.0.1:0";
  const auto tcp = fed::run_federation(config, splits);

  CHECK(gbt::serialize(in_process.model) == gbt::serialize(tcp.model));
  REQUIRE(in_process.logs.size() == tcp.logs.size());
  for (std::size_t r = 0; r < tcp.logs.size(); ++r)
    CHECK(in_process.logs[r].aggregated == tcp.logs[r].aggregated);
}

TEST_CASE("run_federation: R=0 rejected by config validation") {
  fed::FedConfig config;
  config.num_rounds = 0;
  const std::vector<data::ClientSplit> splits;
  CHECK_THROWS_AS(static_cast<void>(fed::run_federation(config, splits)), ConfigError);
}

TEST_CASE("failed federation leaves no partial model file") {
  testutil::TempDir tmp("nofile");
  const auto model_path = tmp.path() / "model.json";

  const data::Dataset dataset = small_synthetic(2);
  data::PartitionPlan plan;
  plan.num_clients = 3;
  plan.test_fraction = 0.2;
  auto splits = data::partition(dataset, plan);

  fed::FedConfig config;
  config.num_clients = 2;  // deliberately inconsistent with 3 splits
  config.num_rounds = 1;
  CHECK_THROWS_AS(static_cast<void>(fed::run_federation_to_file(config, splits, model_path)),
                  ConfigError);
  CHECK(!std::filesystem::exists(model_path));
}

// ---------------------------------------------------------------------------
// wire protocol
// ---------------------------------------------------------------------------

TEST_CASE("wire codec: every message type round-trips") {
  std::mt19937_64 rng(808);

  const fed::Message hello{0, fed::HelloBody{2}};
  const fed::Message decoded_hello = fed::decode_message(fed::encode_message(hello));
  CHECK(std::get<fed::HelloBody>(decoded_hello.body).client_id == 2);

  Ensemble model = testutil::random_ensemble(rng, 3, 5, 4);
  const fed::Message global{3, fed::GlobalModelBody{model}};
  const fed::Message decoded_global = fed::decode_message(fed::encode_message(global));
  CHECK(std::get<fed::GlobalModelBody>(decoded_global.body).model == model);
  CHECK(decoded_global.round == 3);

  ClientUpdate update = make_update(1, 4, 7);
  update.eval_report.mape = 12.5;
  update.eval_report.r2 = 0.75;
  const fed::Message um{4, fed::ClientUpdateBody{update}};
  const fed::Message decoded_update = fed::decode_message(fed::encode_message(um));
  const auto& back = std::get<fed::ClientUpdateBody>(decoded_update.body).update;
  CHECK(back.client_id == 1);
  CHECK(back.trees == update.trees);
  CHECK(back.train_sample_count == update.train_sample_count);
  CHECK(back.eval_report == update.eval_report);

  const fed::Message done{9, fed::RoundDoneBody{1234}};
  CHECK(std::get<fed::RoundDoneBody>(fed::decode_message(fed::encode_message(done)).body)
            .global_tree_count == 1234);

  const fed::Message error{1, fed::ErrorBody{"bad", "details"}};
  const auto decoded_error = fed::decode_message(fed::encode_message(error));
  CHECK(std::get<fed::ErrorBody>(decoded_error.body).code == "bad");
}

TEST_CASE("wire codec: protocol violations carry distinct codes") {
  const std::string valid = fed::encode_message(fed::Message{0, fed::HelloBody{1}});

  SUBCASE("bad version") {
    std::string tampered = valid;
    const auto pos = tampered.find("\"protocol_version\":1");
    REQUIRE(pos != std::string::npos);
    tampered.replace(pos, std::string("\"protocol_version\":1").size(), "\"protocol_version\":2");
    try {
      static_cast<void>(fed::decode_message(tampered));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::bad_version);
    }
  }
  SUBCASE("unknown message type") {
    try {
      static_cast<void>(fed::decode_message(R"({"msg_type":"gossip","protocol_version":1,"round":0})"));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::bad_message_type);
    }
  }
  SUBCASE("unexpected extra field rejected — nothing can be smuggled") {
    std::string tampered = valid;
    tampered.insert(tampered.size() - 1, R"(,"raw_samples":[[1,2,3]])");
    try {
      static_cast<void>(fed::decode_message(tampered));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::unexpected_field);
    }
  }
  SUBCASE("missing field") {
    try {
      static_cast<void>(fed::decode_message(R"({"msg_type":"hello","protocol_version":1})"));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::missing_field);
    }
  }
}

TEST_CASE("framing: oversize frames rejected on both sides") {
  fed::Listener listener("127.0.0.1:0");
  fed::Socket client = fed::Socket::connect("127.0.0.1", listener.port());
  fed::Socket server = listener.accept(1.0);

  SUBCASE("send side refuses") {
    const std::string big(fed::kMaxFrameBytes + 1, 'x');
    try {
      client.send_frame(big);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::oversize_frame);
    }
  }
  SUBCASE("recv side refuses a crafted oversized header") {
    // Raw POSIX socket so the test can write a header send_frame would refuse.
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(listener.port());
    REQUIRE(::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr) == 1);
    REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    fed::Socket raw_server = listener.accept(1.0);

    const std::string header = fed::encode_frame_header(fed::kMaxFrameBytes + 1);
    REQUIRE(::send(fd, header.data(), header.size(), 0) == 4);
    try {
      static_cast<void>(raw_server.recv_frame(1.0));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::oversize_frame);
    }
    ::close(fd);
  }
}

TEST_CASE("frame header codec") {
  const std::string h = fed::encode_frame_header(0x01020304u);
  REQUIRE(h.size() == 4);
  CHECK(static_cast<unsigned char>(h[0]) == 0x01);
  CHECK(static_cast<unsigned char>(h[3]) == 0x04);
  const unsigned char raw[4] = {0x01, 0x02, 0x03, 0x04};
  CHECK(fed::decode_frame_header(raw) == 0x01020304u);
}

TEST_CASE("tcp handle: timeout and malformed updates identify the client") {
  fed::Listener listener("127.0.0.1:0");
  fed::Socket client = fed::Socket::connect("127.0.0.1", listener.port());
  fed::TcpClientHandle handle(listener.accept(1.0), /*client_id=*/7, /*timeout_s=*/0.25);

  SUBCASE("timeout") {
    try {
      static_cast<void>(handle.collect_update(1));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::timeout);
      CHECK(std::string(e.what()).find("client 7") != std::string::npos);
    }
  }
  SUBCASE("malformed update") {
    client.send_frame("this is not json");
    try {
      static_cast<void>(handle.collect_update(1));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(std::string(e.what()).find("client 7") != std::string::npos);
    }
  }
  SUBCASE("round mismatch") {
    client.send_frame(fed::encode_message(fed::Message{2, fed::ClientUpdateBody{make_update(7, 2, 1)}}));
    try {
      static_cast<void>(handle.collect_update(1));
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.code() == ProtocolCode::round_mismatch);
    }
  }
}

TEST_CASE("tcp handle: spliced global_model frame equals encode_message output") {
  std::mt19937_64 rng(99);
  const Ensemble model = testutil::random_ensemble(rng, 3, 4, 4);

  fed::Listener listener("127.0.0.1:0");
  fed::Socket client = fed::Socket::connect("127.0.0.1", listener.port());
  fed::TcpClientHandle handle(listener.accept(1.0), 0, 1.0);
  handle.send_global(5, model, gbt::serialize(model));

  const std::string received = client.recv_frame(1.0);
  CHECK(received == fed::encode_message(fed::Message{5, fed::GlobalModelBody{model}}));
}

// ---------------------------------------------------------------------------
// privacy by schema
// ---------------------------------------------------------------------------

TEST_CASE("privacy: the wire schema has no field capable of carrying raw samples") {
  const auto& schema = fed::wire_schema();

  // Exhaustive enumeration: exactly the five documented message types.
  std::set<std::string> names;
  for (const auto& m : schema) names.insert(m.msg_type);
  CHECK(names == std::set<std::string>{"hello", "global_model", "client_update", "round_done",
                                       "error"});

  // Every field kind is in the closed allowlist; the only payload-bearing
  // kinds are model artifacts (checked against the model schema below) and
  // fixed-shape metric summaries.
  const std::set<fed::FieldKind> allowed = {
      fed::FieldKind::message_tag,     fed::FieldKind::protocol_version,
      fed::FieldKind::round_index,     fed::FieldKind::client_identifier,
      fed::FieldKind::model_artifact,  fed::FieldKind::tree_artifact,
      fed::FieldKind::count_scalar,    fed::FieldKind::metric_summary,
      fed::FieldKind::error_code,      fed::FieldKind::error_text,
  };
  for (const auto& m : schema)
    for (const auto& f : m.fields) {
      CHECK(allowed.count(f.kind) == 1);
      if (f.kind == fed::FieldKind::model_artifact) CHECK(f.name == "model");
      if (f.kind == fed::FieldKind::tree_artifact) CHECK(f.name == "trees");
    }

  // The embedded model schema itself holds split conditions, leaf weights
  // and bookkeeping only — enumerate every key that can occur.
  std::mt19937_64 rng(5);
  const Ensemble model = testutil::random_ensemble(rng, 4, 30, 6);
  const auto doc = gbt::ensemble_to_json(model);
  const std::set<std::string> model_keys = {"schema_version", "base_score", "feature_names",
                                            "iteration_boundaries", "trees"};
  const std::set<std::string> tree_keys = {"tree_id", "iteration_tag", "nodes"};
  const std::set<std::string> node_keys = {"node_id", "kind", "split_feature", "threshold",
                                           "left_child", "right_child", "leaf_weight"};
  for (const auto& [k, v] : doc.items()) CHECK(model_keys.count(k) == 1);
  REQUIRE(doc.contains("trees"));
  for (const auto& jt : doc.at("trees")) {
    for (const auto& [k, v] : jt.items()) CHECK(tree_keys.count(k) == 1);
    for (const auto& jn : jt.at("nodes"))
      for (const auto& [k, v] : jn.items()) CHECK(node_keys.count(k) == 1);
  }

  // The metric summary is exactly the five aggregates plus a count.
  const auto report = fed::metrics_to_json(metrics::MetricsReport{});
  std::set<std::string> metric_keys;
  for (const auto& [k, v] : report.items()) metric_keys.insert(k);
  CHECK(metric_keys == std::set<std::string>{"mae", "mse", "rmse", "mape", "r2", "n"});
}
