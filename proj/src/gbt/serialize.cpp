#include "fedboost/gbt/serialize.hpp"

#include <algorithm>
#include <fstream>

namespace fedboost::gbt {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void malformed(const std::string& detail) {
  throw ParseError(ParseCode::malformed_document, "model document: " + detail);
}

void expect_keys(const ordered_json& j, std::initializer_list<const char*> keys,
                 const char* what) {
  if (!j.is_object()) malformed(std::string(what) + " must be an object");
  if (j.size() != keys.size()) malformed(std::string(what) + " has an unexpected field set");
  for (const char* k : keys)
    if (!j.contains(k)) malformed(std::string(what) + " is missing field '" + k + "'");
}

std::int64_t get_int(const ordered_json& j, const char* key, const char* what) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) malformed(std::string(what) + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

double get_real(const ordered_json& j, const char* key, const char* what) {
  const auto& v = j.at(key);
  if (!v.is_string()) malformed(std::string(what) + "." + key + " must be a decimal string");
  const auto parsed = parse_real(v.get_ref<const std::string&>());
  if (!parsed) malformed(std::string(what) + "." + key + " is not a finite decimal");
  return *parsed;
}

}  // namespace

ordered_json tree_to_json(const DecisionTree& tree) {
  ordered_json nodes = ordered_json::array();
  for (const TreeNode& n : tree.nodes) {
    ordered_json jn;
    jn["node_id"] = n.node_id;
    if (n.kind == TreeNode::Kind::split) {
      jn["kind"] = "split";
      jn["split_feature"] = n.split_feature;
      jn["threshold"] = real_to_string(n.threshold);
      jn["left_child"] = n.left_child;
      jn["right_child"] = n.right_child;
    } else {
      jn["kind"] = "leaf";
      jn["leaf_weight"] = real_to_string(n.leaf_weight);
    }
    nodes.push_back(std::move(jn));
  }
  ordered_json j;
  j["tree_id"] = tree.tree_id;
  j["iteration_tag"] = tree.iteration_tag;
  j["nodes"] = std::move(nodes);
  return j;
}

DecisionTree tree_from_json(const ordered_json& j) {
  expect_keys(j, {"tree_id", "iteration_tag", "nodes"}, "tree");
  DecisionTree tree;
  tree.tree_id = get_int(j, "tree_id", "tree");
  tree.iteration_tag = get_int(j, "iteration_tag", "tree");
  const auto& nodes = j.at("nodes");
  if (!nodes.is_array()) malformed("tree.nodes must be an array");
  for (const auto& jn : nodes) {
    TreeNode n;
    if (!jn.is_object() || !jn.contains("kind") || !jn.at("kind").is_string())
      malformed("node must be an object with a 'kind' string");
    const std::string& kind = jn.at("kind").get_ref<const std::string&>();
    if (kind == "split") {
      expect_keys(jn, {"node_id", "kind", "split_feature", "threshold", "left_child",
                       "right_child"},
                  "split node");
      n.kind = TreeNode::Kind::split;
      n.node_id = static_cast<std::int32_t>(get_int(jn, "node_id", "node"));
      n.split_feature = static_cast<std::int32_t>(get_int(jn, "split_feature", "node"));
      n.threshold = get_real(jn, "threshold", "node");
      n.left_child = static_cast<std::int32_t>(get_int(jn, "left_child", "node"));
      n.right_child = static_cast<std::int32_t>(get_int(jn, "right_child", "node"));
    } else if (kind == "leaf") {
      expect_keys(jn, {"node_id", "kind", "leaf_weight"}, "leaf node");
      n.kind = TreeNode::Kind::leaf;
      n.node_id = static_cast<std::int32_t>(get_int(jn, "node_id", "node"));
      n.leaf_weight = get_real(jn, "leaf_weight", "node");
    } else {
      malformed("unknown node kind '" + kind + "'");
    }
    tree.nodes.push_back(n);
  }
  return tree;
}

ordered_json ensemble_to_json(const Ensemble& ensemble) {
  ordered_json j;
  j["schema_version"] = kEnsembleSchemaVersion;
  j["base_score"] = real_to_string(ensemble.base_score);
  j["feature_names"] = ensemble.feature_names;
  j["iteration_boundaries"] = ensemble.iteration_boundaries;
  ordered_json trees = ordered_json::array();
  for (const auto& tree : ensemble.trees) trees.push_back(tree_to_json(tree));
  j["trees"] = std::move(trees);
  return j;
}

Ensemble ensemble_from_json(const ordered_json& j) {
  if (!j.is_object()) malformed("top level must be an object");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer())
    malformed("missing integer schema_version");
  const auto version = j.at("schema_version").get<std::int64_t>();
  if (version != kEnsembleSchemaVersion)
    throw ParseError(ParseCode::unknown_schema_version,
                     "model document: unknown schema_version " + std::to_string(version));
  expect_keys(j, {"schema_version", "base_score", "feature_names", "iteration_boundaries",
                  "trees"},
              "ensemble");

  Ensemble ensemble;
  ensemble.base_score = get_real(j, "base_score", "ensemble");
  const auto& names = j.at("feature_names");
  if (!names.is_array()) malformed("feature_names must be an array");
  for (const auto& name : names) {
    if (!name.is_string()) malformed("feature_names entries must be strings");
    ensemble.feature_names.push_back(name.get<std::string>());
  }
  const auto& bounds = j.at("iteration_boundaries");
  if (!bounds.is_array()) malformed("iteration_boundaries must be an array");
  for (const auto& b : bounds) {
    if (!b.is_number_integer()) malformed("iteration_boundaries entries must be integers");
    ensemble.iteration_boundaries.push_back(b.get<std::int64_t>());
  }
  const auto& trees = j.at("trees");
  if (!trees.is_array()) malformed("trees must be an array");
  for (const auto& jt : trees) ensemble.trees.push_back(tree_from_json(jt));

  validate_ensemble(ensemble);
  return ensemble;
}

std::string serialize(const Ensemble& ensemble) { return ensemble_to_json(ensemble).dump(); }

Ensemble deserialize(std::string_view bytes) {
  ordered_json j = ordered_json::parse(bytes, /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) malformed("not valid JSON");
  return ensemble_from_json(j);
}

void write_model_file(const Ensemble& ensemble, const std::filesystem::path& path) {
  const std::string bytes = serialize(ensemble);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write model file '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.put('\n');
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

Ensemble read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace fedboost::gbt
