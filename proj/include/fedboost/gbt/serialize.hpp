#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fedboost/gbt/types.hpp"

namespace fedboost::gbt {

// Model document schema, version 1. Field order is fixed; documents are
// emitted compact (no whitespace); reals are shortest-round-trip decimal
// strings so deserialize(serialize(E)) is bit-exact and re-serialization is
// byte-identical.
//
// {
//   "schema_version": 1,
//   "base_score": "<real>",
//   "feature_names": ["cpu_util", ...],
//   "iteration_boundaries": [0, 300, ...],
//   "trees": [
//     {"tree_id": 0, "iteration_tag": 0, "nodes": [
//       {"node_id": 0, "kind": "split", "split_feature": 1,
//        "threshold": "<real>", "left_child": 1, "right_child": 2},
//       {"node_id": 1, "kind": "leaf", "leaf_weight": "<real>"},
//       ...]},
//     ...]
// }
//
// Parsing is strict: wrong types, missing fields and unknown fields are all
// ParseCode::malformed_document; an unexpected "schema_version" is
// ParseCode::unknown_schema_version; structural defects keep their own codes.

inline constexpr int kEnsembleSchemaVersion = 1;

nlohmann::ordered_json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json ensemble_to_json(const Ensemble& ensemble);
Ensemble ensemble_from_json(const nlohmann::ordered_json& j);

std::string serialize(const Ensemble& ensemble);
Ensemble deserialize(std::string_view bytes);

// File forms. Writing goes through a temp file plus rename, so a failed run
// never leaves a partial model behind.
void write_model_file(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble read_model_file(const std::filesystem::path& path);

}  // namespace fedboost::gbt
