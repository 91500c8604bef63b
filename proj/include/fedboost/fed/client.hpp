#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "fedboost/data/pipeline.hpp"
#include "fedboost/fed/messages.hpp"

namespace fedboost::fed {

// Everything a client needs locally: its private splits and the shared
// training configuration. Raw samples never leave this struct.
struct ClientContext {
  std::int32_t client_id = -1;
  data::Dataset train;
  data::Dataset test;
  gbt::TrainConfig config;
};

// One round of client work, shared verbatim by both transports: parse the
// broadcast global model, score it on the local test split (so round-r
// metrics describe the round-(r-1) aggregate), then boost fresh trees
// against the local residuals.
ClientUpdate client_round(const ClientContext& ctx, std::int64_t round,
                          std::string_view global_model_bytes,
                          gbt::kernels::ExecMode mode = gbt::kernels::default_mode());

// TCP client loop: connect, introduce the client with `hello`, answer every
// `global_model` with a `client_update`, and return when the server closes
// the connection after the final `round_done`.
void run_tcp_client(const std::string& host, std::uint16_t port, const ClientContext& ctx,
                    gbt::kernels::ExecMode mode = gbt::kernels::default_mode());

}  // namespace fedboost::fed
