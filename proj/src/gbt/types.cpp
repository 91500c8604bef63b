#include "fedboost/gbt/types.hpp"

#include <algorithm>

namespace fedboost::gbt {

void Ensemble::append_round(std::vector<DecisionTree> round_trees) {
  const auto start = static_cast<std::int64_t>(trees.size());
  iteration_boundaries.push_back(start);
  trees.reserve(trees.size() + round_trees.size());
  for (std::size_t i = 0; i < round_trees.size(); ++i) {
    round_trees[i].tree_id = start + static_cast<std::int64_t>(i);
    trees.push_back(std::move(round_trees[i]));
  }
}

void TrainConfig::validate() const {
  if (n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ConfigError("learning_rate must be in (0, 1]");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (!(reg_lambda >= 0.0)) throw ConfigError("reg_lambda must be >= 0");
  if (!(min_split_gain >= 0.0)) throw ConfigError("min_split_gain must be >= 0");
  if (!(min_child_weight >= 0.0)) throw ConfigError("min_child_weight must be >= 0");
}

void validate_tree(const DecisionTree& tree) {
  const auto n = static_cast<std::int32_t>(tree.nodes.size());
  if (n == 0)
    throw ParseError(ParseCode::invalid_structure,
                     "tree " + std::to_string(tree.tree_id) + " has no nodes");

  std::vector<std::int32_t> parent_count(tree.nodes.size(), 0);
  for (std::int32_t i = 0; i < n; ++i) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
    if (node.node_id != i)
      throw ParseError(ParseCode::invalid_structure,
                       "tree " + std::to_string(tree.tree_id) + ": node ids must be dense, got " +
                           std::to_string(node.node_id) + " at position " + std::to_string(i));
    if (node.kind == TreeNode::Kind::split) {
      for (std::int32_t child : {node.left_child, node.right_child}) {
        if (child < 0 || child >= n)
          throw ParseError(ParseCode::dangling_child_index,
                           "tree " + std::to_string(tree.tree_id) + ": node " + std::to_string(i) +
                               " references missing child " + std::to_string(child));
        parent_count[static_cast<std::size_t>(child)]++;
      }
      if (node.split_feature < 0)
        throw ParseError(ParseCode::invalid_structure,
                         "tree " + std::to_string(tree.tree_id) + ": node " + std::to_string(i) +
                             " has a negative split feature");
      if (!std::isfinite(node.threshold))
        throw ParseError(ParseCode::invalid_structure,
                         "tree " + std::to_string(tree.tree_id) + ": non-finite threshold");
    } else {
      if (!std::isfinite(node.leaf_weight))
        throw ParseError(ParseCode::invalid_structure,
                         "tree " + std::to_string(tree.tree_id) + ": non-finite leaf weight");
    }
  }

  if (parent_count[0] != 0)
    throw ParseError(ParseCode::invalid_structure,
                     "tree " + std::to_string(tree.tree_id) + ": root must have no parent");
  for (std::int32_t i = 1; i < n; ++i) {
    if (parent_count[static_cast<std::size_t>(i)] != 1)
      throw ParseError(ParseCode::invalid_structure,
                       "tree " + std::to_string(tree.tree_id) + ": node " + std::to_string(i) +
                           " must have exactly one parent, has " +
                           std::to_string(parent_count[static_cast<std::size_t>(i)]));
  }
  // Dense ids + single parent for every non-root already rule out cycles:
  // a cycle would give some node a second parent or orphan the root.
}

void validate_ensemble(const Ensemble& ensemble) {
  if (!std::isfinite(ensemble.base_score))
    throw ParseError(ParseCode::invalid_structure, "non-finite base_score");

  const auto total = static_cast<std::int64_t>(ensemble.trees.size());
  std::vector<bool> seen(ensemble.trees.size(), false);
  for (const auto& tree : ensemble.trees) {
    if (tree.tree_id < 0 || tree.tree_id >= total)
      throw ParseError(ParseCode::invalid_structure,
                       "tree_id " + std::to_string(tree.tree_id) + " outside 0.." +
                           std::to_string(total - 1));
    if (seen[static_cast<std::size_t>(tree.tree_id)])
      throw ParseError(ParseCode::duplicate_tree_id,
                       "duplicate tree_id " + std::to_string(tree.tree_id));
    seen[static_cast<std::size_t>(tree.tree_id)] = true;
    validate_tree(tree);
    for (const TreeNode& node : tree.nodes) {
      if (node.kind == TreeNode::Kind::split &&
          static_cast<std::size_t>(node.split_feature) >= ensemble.feature_names.size())
        throw ParseError(ParseCode::invalid_structure,
                         "tree " + std::to_string(tree.tree_id) + " splits on feature " +
                             std::to_string(node.split_feature) + " but only " +
                             std::to_string(ensemble.feature_names.size()) + " features exist");
    }
  }

  const auto& bounds = ensemble.iteration_boundaries;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (i == 0 && bounds[0] != 0)
      throw ParseError(ParseCode::invalid_structure, "iteration_boundaries must start at 0");
    if (i > 0 && bounds[i] <= bounds[i - 1])
      throw ParseError(ParseCode::invalid_structure,
                       "iteration_boundaries must be strictly increasing");
    if (bounds[i] < 0 || bounds[i] >= total)
      throw ParseError(ParseCode::invalid_structure,
                       "iteration boundary " + std::to_string(bounds[i]) +
                           " does not index an existing tree");
  }
  if (!ensemble.trees.empty() && bounds.empty())
    throw ParseError(ParseCode::invalid_structure,
                     "non-empty ensemble is missing iteration boundaries");
}

}  // namespace fedboost::gbt
