#include "fedboost/fed/messages.hpp"

#include <algorithm>

namespace fedboost::fed {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void protocol_error(ProtocolCode code, const std::string& detail) {
  throw ProtocolError(code, "wire message: " + detail);
}

const WireMessageSpec& spec_for(const std::string& msg_type) {
  for (const auto& spec : wire_schema())
    if (spec.msg_type == msg_type) return spec;
  protocol_error(ProtocolCode::bad_message_type, "unknown msg_type '" + msg_type + "'");
}

// Exact field-set check against the schema table.
void enforce_field_set(const ordered_json& j, const WireMessageSpec& spec) {
  for (const auto& field : spec.fields)
    if (!j.contains(field.name))
      protocol_error(ProtocolCode::missing_field,
                     "'" + spec.msg_type + "' is missing field '" + field.name + "'");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(spec.fields.begin(), spec.fields.end(),
                                   [&](const WireField& f) { return f.name == key; });
    if (!known)
      protocol_error(ProtocolCode::unexpected_field,
                     "'" + spec.msg_type + "' carries unexpected field '" + key + "'");
  }
}

std::int64_t get_int(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer())
    protocol_error(ProtocolCode::missing_field, std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

double get_real_string(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string())
    protocol_error(ProtocolCode::missing_field,
                   std::string("field '") + key + "' must be a decimal string");
  const auto parsed = parse_real(v.get_ref<const std::string&>());
  if (!parsed)
    protocol_error(ProtocolCode::missing_field,
                   std::string("field '") + key + "' is not a finite decimal");
  return *parsed;
}

}  // namespace

const std::vector<WireMessageSpec>& wire_schema() {
  static const std::vector<WireMessageSpec> schema = {
      {"hello",
       {{"msg_type", FieldKind::message_tag},
        {"protocol_version", FieldKind::protocol_version},
        {"round", FieldKind::round_index},
        {"client_id", FieldKind::client_identifier}}},
      {"global_model",
       {{"msg_type", FieldKind::message_tag},
        {"protocol_version", FieldKind::protocol_version},
        {"round", FieldKind::round_index},
        {"model", FieldKind::model_artifact}}},
      {"client_update",
       {{"msg_type", FieldKind::message_tag},
        {"protocol_version", FieldKind::protocol_version},
        {"round", FieldKind::round_index},
        {"client_id", FieldKind::client_identifier},
        {"trees", FieldKind::tree_artifact},
        {"train_sample_count", FieldKind::count_scalar},
        {"eval_report", FieldKind::metric_summary}}},
      {"round_done",
       {{"msg_type", FieldKind::message_tag},
        {"protocol_version", FieldKind::protocol_version},
        {"round", FieldKind::round_index},
        {"global_tree_count", FieldKind::count_scalar}}},
      {"error",
       {{"msg_type", FieldKind::message_tag},
        {"protocol_version", FieldKind::protocol_version},
        {"round", FieldKind::round_index},
        {"code", FieldKind::error_code},
        {"detail", FieldKind::error_text}}},
  };
  return schema;
}

std::string msg_type_name(const Message& message) {
  struct Visitor {
    std::string operator()(const HelloBody&) const { return "hello"; }
    std::string operator()(const GlobalModelBody&) const { return "global_model"; }
    std::string operator()(const ClientUpdateBody&) const { return "client_update"; }
    std::string operator()(const RoundDoneBody&) const { return "round_done"; }
    std::string operator()(const ErrorBody&) const { return "error"; }
  };
  return std::visit(Visitor{}, message.body);
}

ordered_json metrics_to_json(const metrics::MetricsReport& report) {
  ordered_json j;
  j["mae"] = real_to_string(report.mae);
  j["mse"] = real_to_string(report.mse);
  j["rmse"] = real_to_string(report.rmse);
  j["mape"] = report.mape ? ordered_json(real_to_string(*report.mape)) : ordered_json(nullptr);
  j["r2"] = report.r2 ? ordered_json(real_to_string(*report.r2)) : ordered_json(nullptr);
  j["n"] = static_cast<std::int64_t>(report.n);
  return j;
}

metrics::MetricsReport metrics_from_json(const ordered_json& j) {
  if (!j.is_object() || j.size() != 6)
    protocol_error(ProtocolCode::unexpected_field, "eval_report must have exactly 6 fields");
  metrics::MetricsReport report;
  report.mae = get_real_string(j, "mae");
  report.mse = get_real_string(j, "mse");
  report.rmse = get_real_string(j, "rmse");
  for (const char* key : {"mape", "r2"})
    if (!j.contains(key))
      protocol_error(ProtocolCode::missing_field, std::string("eval_report misses '") + key + "'");
  if (!j.at("mape").is_null()) report.mape = get_real_string(j, "mape");
  if (!j.at("r2").is_null()) report.r2 = get_real_string(j, "r2");
  const std::int64_t n = get_int(j, "n");
  if (n < 0) protocol_error(ProtocolCode::missing_field, "eval_report.n must be >= 0");
  report.n = static_cast<std::size_t>(n);
  return report;
}

std::string encode_message(const Message& message) {
  ordered_json j;
  j["msg_type"] = msg_type_name(message);
  j["protocol_version"] = kProtocolVersion;
  j["round"] = message.round;

  struct Visitor {
    ordered_json& j;
    void operator()(const HelloBody& b) const { j["client_id"] = b.client_id; }
    void operator()(const GlobalModelBody& b) const { j["model"] = gbt::ensemble_to_json(b.model); }
    void operator()(const ClientUpdateBody& b) const {
      j["client_id"] = b.update.client_id;
      ordered_json trees = ordered_json::array();
      for (const auto& tree : b.update.trees) trees.push_back(gbt::tree_to_json(tree));
      j["trees"] = std::move(trees);
      j["train_sample_count"] = b.update.train_sample_count;
      j["eval_report"] = metrics_to_json(b.update.eval_report);
    }
    void operator()(const RoundDoneBody& b) const { j["global_tree_count"] = b.global_tree_count; }
    void operator()(const ErrorBody& b) const {
      j["code"] = b.code;
      j["detail"] = b.detail;
    }
  };
  std::visit(Visitor{j}, message.body);
  return j.dump();
}

Message decode_message(std::string_view payload) {
  ordered_json j = ordered_json::parse(payload, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    protocol_error(ProtocolCode::bad_message_type, "frame payload is not a JSON object");
  if (!j.contains("msg_type") || !j.at("msg_type").is_string())
    protocol_error(ProtocolCode::bad_message_type, "missing msg_type");
  const std::string msg_type = j.at("msg_type").get<std::string>();
  const WireMessageSpec& spec = spec_for(msg_type);
  enforce_field_set(j, spec);

  const std::int64_t version = get_int(j, "protocol_version");
  if (version != kProtocolVersion)
    protocol_error(ProtocolCode::bad_version,
                   "protocol_version " + std::to_string(version) + " unsupported");

  Message message;
  message.round = get_int(j, "round");

  if (msg_type == "hello") {
    HelloBody b;
    b.client_id = static_cast<std::int32_t>(get_int(j, "client_id"));
    message.body = b;
  } else if (msg_type == "global_model") {
    GlobalModelBody b;
    b.model = gbt::ensemble_from_json(j.at("model"));
    message.body = std::move(b);
  } else if (msg_type == "client_update") {
    ClientUpdateBody b;
    b.update.client_id = static_cast<std::int32_t>(get_int(j, "client_id"));
    b.update.round = message.round;
    const auto& trees = j.at("trees");
    if (!trees.is_array())
      protocol_error(ProtocolCode::missing_field, "client_update.trees must be an array");
    for (const auto& jt : trees) b.update.trees.push_back(gbt::tree_from_json(jt));
    b.update.train_sample_count = get_int(j, "train_sample_count");
    b.update.eval_report = metrics_from_json(j.at("eval_report"));
    message.body = std::move(b);
  } else if (msg_type == "round_done") {
    RoundDoneBody b;
    b.global_tree_count = get_int(j, "global_tree_count");
    message.body = b;
  } else {  // error
    ErrorBody b;
    if (!j.at("code").is_string() || !j.at("detail").is_string())
      protocol_error(ProtocolCode::missing_field, "error code/detail must be strings");
    b.code = j.at("code").get<std::string>();
    b.detail = j.at("detail").get<std::string>();
    message.body = std::move(b);
  }
  return message;
}

}  // namespace fedboost::fed
