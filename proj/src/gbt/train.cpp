#include "fedboost/gbt/train.hpp"

#include <cassert>
#include <cmath>

namespace fedboost::gbt {

using kernels::ExecMode;
using kernels::SplitCandidate;
using kernels::SplitScanInput;

double predict(const Ensemble& ensemble, std::span<const double> features) {
  double acc = ensemble.base_score;
  for (const auto& tree : ensemble.trees) acc += tree.route(features);
  return acc;
}

namespace {

struct TreeBuilder {
  const data::FeatureMatrix& matrix;
  std::span<const double> gradients;
  std::span<const double> hessians;
  const TrainConfig& config;
  ExecMode mode;
  DecisionTree tree;
  std::vector<SplitCandidate> candidates;

  // Builds the subtree rooted at the given node rows; returns its node id.
  // Nodes are laid out in preorder (root first, then left, then right).
  std::int32_t build(const std::vector<std::int32_t>& rows, std::int32_t depth) {
    double grad_sum = 0.0;
    double hess_sum = 0.0;
    for (const std::int32_t r : rows) {
      grad_sum += gradients[static_cast<std::size_t>(r)];
      hess_sum += hessians[static_cast<std::size_t>(r)];
    }

    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().node_id = id;

    if (depth < config.max_depth && rows.size() >= 2) {
      SplitScanInput in;
      in.matrix = &matrix;
      in.gradients = gradients;
      in.hessians = hessians;
      in.node_rows = rows;
      in.total_grad = grad_sum;
      in.total_hess = hess_sum;
      in.reg_lambda = config.reg_lambda;
      in.min_split_gain = config.min_split_gain;
      in.min_child_weight = config.min_child_weight;
      kernels::best_split_per_feature(in, candidates, mode);

      // Ascending feature order with a strict comparison realizes the
      // lower-feature-index tie-break.
      std::int32_t best_feature = -1;
      SplitCandidate best;
      for (std::size_t f = 0; f < candidates.size(); ++f) {
        const auto& c = candidates[f];
        if (c.valid && (best_feature < 0 || c.gain > best.gain)) {
          best_feature = static_cast<std::int32_t>(f);
          best = c;
        }
      }

      if (best_feature >= 0) {
        std::vector<std::int32_t> left_rows;
        std::vector<std::int32_t> right_rows;
        const auto column = matrix.column(static_cast<std::size_t>(best_feature));
        for (const std::int32_t r : rows) {  // stable partition keeps row order canonical
          const double v = column[static_cast<std::size_t>(r)];
          if (std::isnan(v) || v < best.threshold)
            left_rows.push_back(r);
          else
            right_rows.push_back(r);
        }

        const std::int32_t left_id = build(left_rows, depth + 1);
        const std::int32_t right_id = build(right_rows, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.kind = TreeNode::Kind::split;
        node.split_feature = best_feature;
        node.threshold = best.threshold == 0.0 ? 0.0 : best.threshold;  // canonicalize -0
        node.left_child = left_id;
        node.right_child = right_id;
        return id;
      }
    }

    double weight = -grad_sum / (hess_sum + config.reg_lambda) * config.learning_rate;
    if (weight == 0.0) weight = 0.0;  // canonicalize -0 for byte-stable output
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.kind = TreeNode::Kind::leaf;
    node.leaf_weight = weight;
    return id;
  }
};

}  // namespace

DecisionTree grow_tree(std::span<const double> gradients, std::span<const double> hessians,
                       const data::FeatureMatrix& matrix, const TrainConfig& config,
                       ExecMode mode) {
  config.validate();
  if (gradients.size() != hessians.size() || gradients.size() != matrix.rows())
    throw TrainError("grow_tree: gradients (" + std::to_string(gradients.size()) +
                     "), hessians (" + std::to_string(hessians.size()) + ") and data rows (" +
                     std::to_string(matrix.rows()) + ") must have equal length");
  if (matrix.rows() == 0) throw TrainError("grow_tree: dataset is empty");

  TreeBuilder builder{matrix, gradients, hessians, config, mode, {}, {}};
  builder.candidates.resize(matrix.cols());
  std::vector<std::int32_t> all_rows(matrix.rows());
  for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = static_cast<std::int32_t>(i);
  builder.tree.nodes.reserve(64);
  builder.build(all_rows, 0);
  return std::move(builder.tree);
}

DecisionTree grow_tree(std::span<const double> gradients, std::span<const double> hessians,
                       const data::Dataset& dataset, const TrainConfig& config, ExecMode mode) {
  const data::FeatureMatrix matrix(dataset);
  return grow_tree(gradients, hessians, matrix, config, mode);
}

std::vector<DecisionTree> train_local(const Ensemble& warm_start, const data::Dataset& dataset,
                                      const TrainConfig& config, ExecMode mode) {
  config.validate();
  if (dataset.size() == 0) throw TrainError("train_local: dataset is empty");
  if (!warm_start.feature_names.empty() && warm_start.feature_names != dataset.feature_names)
    throw TrainError("train_local: warm-start feature names do not match the dataset");

  const data::FeatureMatrix matrix(dataset);
  const std::vector<double> targets = data::targets_of(dataset);

  std::vector<double> preds(dataset.size());
  kernels::predict_batch(warm_start, matrix, preds, mode);

  std::vector<double> gradients(dataset.size());
  const std::vector<double> hessians(dataset.size(), 1.0);  // squared error: h = 1

  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(config.n_estimators));
  std::int64_t tag = warm_start.last_iteration_tag() + 1;
  for (std::int64_t t = 0; t < config.n_estimators; ++t) {
    for (std::size_t i = 0; i < gradients.size(); ++i) gradients[i] = preds[i] - targets[i];
    DecisionTree tree = grow_tree(gradients, hessians, matrix, config, mode);
    tree.tree_id = t;  // client-local id, pending aggregator renumbering
    tree.iteration_tag = tag++;
    kernels::apply_tree(tree, matrix, preds, mode);
    trees.push_back(std::move(tree));
  }
  return trees;
}

}  // namespace fedboost::gbt
