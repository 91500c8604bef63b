#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedboost/common.hpp"

namespace fedboost::gbt {

// One node of a binary regression tree. Node ids are dense indices into the
// owning tree's node vector; node 0 is the root. Split nodes route a sample
// left iff its feature value is missing (NaN) or strictly below the
// threshold.
struct TreeNode {
  enum class Kind { split, leaf };

  std::int32_t node_id = 0;
  Kind kind = Kind::leaf;

  // split fields
  std::int32_t split_feature = -1;
  double threshold = 0.0;
  std::int32_t left_child = -1;
  std::int32_t right_child = -1;

  // leaf field; watts contribution, already scaled by the learning rate
  double leaf_weight = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::int64_t tree_id = 0;        // globally unique after aggregation
  std::int64_t iteration_tag = 0;  // boosting iteration that produced the tree
  std::vector<TreeNode> nodes;

  bool operator==(const DecisionTree&) const = default;

  // Routes a feature vector from the root to a leaf and returns its weight.
  double route(std::span<const double> features) const {
    const TreeNode* node = &nodes[0];
    while (node->kind == TreeNode::Kind::split) {
      const double v = features[static_cast<std::size_t>(node->split_feature)];
      const bool go_left = std::isnan(v) || v < node->threshold;
      node = &nodes[static_cast<std::size_t>(go_left ? node->left_child : node->right_child)];
    }
    return node->leaf_weight;
  }
};

// The global model M_G: an ordered tree list on top of a constant base score.
// iteration_boundaries records, per aggregation round, the index in `trees`
// where that round's trees start.
struct Ensemble {
  double base_score = 0.0;
  std::vector<std::string> feature_names;
  std::vector<DecisionTree> trees;
  std::vector<std::int64_t> iteration_boundaries;

  bool operator==(const Ensemble&) const = default;

  std::size_t tree_count() const { return trees.size(); }

  // Largest iteration_tag present, or -1 for an empty ensemble.
  std::int64_t last_iteration_tag() const {
    std::int64_t last = -1;
    for (const auto& t : trees) last = std::max(last, t.iteration_tag);
    return last;
  }

  // Appends one round's trees: renumbers tree_id to continue the gap-free
  // 0..T-1 range and records the round's starting index. Both the federated
  // aggregator and the centralized assembler go through here, which is what
  // makes the two paths byte-identical for K=1.
  void append_round(std::vector<DecisionTree> round_trees);
};

struct TrainConfig {
  std::int64_t n_estimators = 100;
  double learning_rate = 0.01;
  std::int32_t max_depth = 6;
  double reg_lambda = 1.0;
  double min_split_gain = 0.0;
  double min_child_weight = 1.0;
  std::int64_t seed = 0;

  // Throws ConfigError when a field is outside its documented domain.
  void validate() const;
};

// Structural validation shared by deserialize() and the `verify` subcommand.
// Checks: dense unique node ids, node 0 root, split/leaf arity, every
// non-root node having exactly one parent, no cycles, in-range children,
// finite reals, gap-free tree_ids 0..T-1, and iteration_boundaries strictly
// increasing from 0.
void validate_tree(const DecisionTree& tree);
void validate_ensemble(const Ensemble& ensemble);

}  // namespace fedboost::gbt
