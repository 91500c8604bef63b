#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fedboost/gbt/serialize.hpp"
#include "fedboost/metrics/metrics.hpp"

namespace fedboost::fed {

inline constexpr int kProtocolVersion = 1;

// One client's contribution for a round. Tree ids are client-local until the
// aggregator renumbers them.
struct ClientUpdate {
  std::int32_t client_id = -1;
  std::int64_t round = 0;
  std::vector<gbt::DecisionTree> trees;
  std::int64_t train_sample_count = 0;
  metrics::MetricsReport eval_report;  // broadcast (pre-update) model on the local test split
};

// ---------------------------------------------------------------------------
// Wire protocol, version 1
// ---------------------------------------------------------------------------
//
// Every frame is a JSON object with "msg_type", "protocol_version" and
// "round" plus the type-specific fields below. The field sets are closed:
// encode writes exactly these fields and decode rejects anything extra, so
// the schema table underneath is the complete wire surface. By construction
// it has no field that can carry raw samples; only model artifacts and
// metric summaries travel.

struct HelloBody {
  std::int32_t client_id = -1;
};
struct GlobalModelBody {
  gbt::Ensemble model;
};
struct ClientUpdateBody {
  ClientUpdate update;  // client_id, trees, train_sample_count, eval_report
};
struct RoundDoneBody {
  std::int64_t global_tree_count = 0;
};
struct ErrorBody {
  std::string code;
  std::string detail;
};

struct Message {
  std::int64_t round = 0;
  std::variant<HelloBody, GlobalModelBody, ClientUpdateBody, RoundDoneBody, ErrorBody> body;
};

std::string msg_type_name(const Message& message);

std::string encode_message(const Message& message);
Message decode_message(std::string_view payload);

// Machine-readable schema of the wire surface, one entry per message type.
// decode_message enforces these exact field sets; the privacy suite
// enumerates them.
enum class FieldKind {
  message_tag,
  protocol_version,
  round_index,
  client_identifier,
  model_artifact,   // full ensemble document (model schema, no sample fields)
  tree_artifact,    // array of tree documents (model schema subset)
  count_scalar,
  metric_summary,   // the five aggregate metrics plus a count
  error_code,
  error_text,       // diagnostic string composed from error summaries
};

struct WireField {
  std::string name;
  FieldKind kind;
};

struct WireMessageSpec {
  std::string msg_type;
  std::vector<WireField> fields;
};

const std::vector<WireMessageSpec>& wire_schema();

// MetricsReport codec shared by client_update bodies (reals as decimal
// strings, absent metrics as null).
nlohmann::ordered_json metrics_to_json(const metrics::MetricsReport& report);
metrics::MetricsReport metrics_from_json(const nlohmann::ordered_json& j);

}  // namespace fedboost::fed
