#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fedboost/fed/client.hpp"
#include "fedboost/fed/messages.hpp"
#include "fedboost/fed/transport.hpp"

namespace fedboost::fed {

enum class TransportKind { in_process, tcp };

struct FedConfig {
  std::int32_t num_clients = 1;
  std::int64_t num_rounds = 1;
  gbt::TrainConfig train_config;
  double base_score = 0.0;
  TransportKind transport = TransportKind::in_process;
  std::string listen_address = "127.0.0.1:0";  // tcp only; port 0 = ephemeral
  double round_timeout_s = 120.0;
  bool weighted_metrics = false;  // weight the aggregate row by client test sizes

  void validate() const;
};

// One row of the training history. client_reports is indexed by client_id;
// metrics describe the broadcast (pre-update) model, so round r scores the
// round-(r-1) aggregate. global_tree_count is taken after aggregation and
// strictly increases across rounds.
struct RoundLog {
  std::int64_t round = 0;
  std::int64_t global_tree_count = 0;
  std::vector<metrics::MetricsReport> client_reports;
  metrics::MetricsReport aggregated;
};

// Server-side view of one client. send_global is issued to every client
// before any collect_update so networked clients train concurrently;
// aggregation itself happens on the server thread only.
class ClientHandle {
 public:
  virtual ~ClientHandle() = default;
  virtual std::int32_t client_id() const = 0;
  virtual void send_global(std::int64_t round, const gbt::Ensemble& model,
                           const std::string& model_bytes) = 0;
  virtual ClientUpdate collect_update(std::int64_t round) = 0;
  virtual void finish_round(std::int64_t round, std::int64_t global_tree_count) = 0;
  // Best effort; must not throw.
  virtual void report_error(const std::string& code, const std::string& detail) = 0;
};

// Simulated client: stores the broadcast bytes and runs client_round inside
// collect_update, so simulated rounds execute clients one after another yet
// produce exactly what concurrent execution would.
class InProcessClient final : public ClientHandle {
 public:
  explicit InProcessClient(ClientContext ctx) : ctx_(std::move(ctx)) {}

  std::int32_t client_id() const override { return ctx_.client_id; }
  void send_global(std::int64_t round, const gbt::Ensemble&, const std::string& bytes) override {
    pending_round_ = round;
    pending_model_ = bytes;
  }
  ClientUpdate collect_update(std::int64_t round) override;
  void finish_round(std::int64_t, std::int64_t) override {}
  void report_error(const std::string&, const std::string&) override {}

 private:
  ClientContext ctx_;
  std::int64_t pending_round_ = -1;
  std::string pending_model_;
};

// One connected TCP client. The constructor takes a socket on which `hello`
// has already been consumed.
class TcpClientHandle final : public ClientHandle {
 public:
  TcpClientHandle(Socket socket, std::int32_t client_id, double timeout_s)
      : socket_(std::move(socket)), client_id_(client_id), timeout_s_(timeout_s) {}

  std::int32_t client_id() const override { return client_id_; }
  void send_global(std::int64_t round, const gbt::Ensemble& model,
                   const std::string& model_bytes) override;
  ClientUpdate collect_update(std::int64_t round) override;
  void finish_round(std::int64_t round, std::int64_t global_tree_count) override;
  void report_error(const std::string& code, const std::string& detail) override;

 private:
  Socket socket_;
  std::int32_t client_id_ = -1;
  double timeout_s_ = 120.0;
};

// FedXgbBagging aggregation: append every client's fresh trees to the global
// ensemble in (client_id, local order) order, renumber tree_ids into the
// gap-free range 0..T-1, and mark the round's starting index. No weighting
// is applied; every tree keeps its fitted leaf values.
gbt::Ensemble aggregate(gbt::Ensemble global, std::vector<ClientUpdate> updates);

// One federation cycle over already-connected clients: broadcast, collect,
// aggregate, log. Any client failure aborts the whole round.
RoundLog run_round(std::int64_t round, gbt::Ensemble& global,
                   std::span<const std::unique_ptr<ClientHandle>> clients, bool weighted_metrics);

struct FederationResult {
  std::vector<RoundLog> logs;
  gbt::Ensemble model;
};

// Runs all rounds over the configured transport. splits[k] becomes client
// k's private data. With transport=tcp this hosts the server and spawns one
// thread per client that talks real sockets against listen_address.
FederationResult run_federation(const FedConfig& config,
                                std::span<const data::ClientSplit> splits);

// Same, then persists the final model. The file appears only on success
// (written to a temp path and renamed).
FederationResult run_federation_to_file(const FedConfig& config,
                                        std::span<const data::ClientSplit> splits,
                                        const std::filesystem::path& model_path);

}  // namespace fedboost::fed
