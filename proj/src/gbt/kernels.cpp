#include "fedboost/gbt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedboost::gbt::kernels {

ExecMode default_mode() {
#ifdef _OPENMP
  return ExecMode::parallel;
#else
  return ExecMode::serial;
#endif
}

double route_row(const DecisionTree& tree, const data::FeatureMatrix& m, std::size_t row) {
  const TreeNode* node = &tree.nodes[0];
  while (node->kind == TreeNode::Kind::split) {
    const double v = m.at(row, static_cast<std::size_t>(node->split_feature));
    const bool go_left = std::isnan(v) || v < node->threshold;
    node = &tree.nodes[static_cast<std::size_t>(go_left ? node->left_child : node->right_child)];
  }
  return node->leaf_weight;
}

// ---------------------------------------------------------------------------
// Batch prediction
// ---------------------------------------------------------------------------

static double predict_one(const Ensemble& ensemble, const data::FeatureMatrix& m,
                          std::size_t row) {
  double acc = ensemble.base_score;
  for (const auto& tree : ensemble.trees) acc += route_row(tree, m, row);
  return acc;
}

void predict_batch_serial(const Ensemble& ensemble, const data::FeatureMatrix& m,
                          std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = predict_one(ensemble, m, r);
}

void predict_batch_parallel(const Ensemble& ensemble, const data::FeatureMatrix& m,
                            std::span<double> out) {
  const auto n = static_cast<std::int64_t>(m.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r)
    out[static_cast<std::size_t>(r)] = predict_one(ensemble, m, static_cast<std::size_t>(r));
}

void predict_batch(const Ensemble& ensemble, const data::FeatureMatrix& m, std::span<double> out,
                   ExecMode mode) {
  if (mode == ExecMode::parallel)
    predict_batch_parallel(ensemble, m, out);
  else
    predict_batch_serial(ensemble, m, out);
}

void apply_tree_serial(const DecisionTree& tree, const data::FeatureMatrix& m,
                       std::span<double> preds) {
  for (std::size_t r = 0; r < m.rows(); ++r) preds[r] += route_row(tree, m, r);
}

void apply_tree_parallel(const DecisionTree& tree, const data::FeatureMatrix& m,
                         std::span<double> preds) {
  const auto n = static_cast<std::int64_t>(m.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r)
    preds[static_cast<std::size_t>(r)] += route_row(tree, m, static_cast<std::size_t>(r));
}

void apply_tree(const DecisionTree& tree, const data::FeatureMatrix& m, std::span<double> preds,
                ExecMode mode) {
  if (mode == ExecMode::parallel)
    apply_tree_parallel(tree, m, preds);
  else
    apply_tree_serial(tree, m, preds);
}

// ---------------------------------------------------------------------------
// Exact-greedy split scan
// ---------------------------------------------------------------------------

static double gain_term(double g, double h, double lambda) { return g * g / (h + lambda); }

// Scans a single feature column. Fully self-contained so the parallel driver
// can run one feature per thread and stay bit-identical to the serial loop.
static SplitCandidate scan_feature(const SplitScanInput& in, std::size_t feature) {
  const auto column = in.matrix->column(feature);

  // Present values sorted by (value, row); missing rows contribute to the
  // left side of every candidate.
  std::vector<std::pair<double, std::int32_t>> present;
  present.reserve(in.node_rows.size());
  double missing_grad = 0.0;
  double missing_hess = 0.0;
  for (const std::int32_t row : in.node_rows) {
    const double v = column[static_cast<std::size_t>(row)];
    if (std::isnan(v)) {
      missing_grad += in.gradients[static_cast<std::size_t>(row)];
      missing_hess += in.hessians[static_cast<std::size_t>(row)];
    } else {
      present.emplace_back(v, row);
    }
  }
  if (present.size() < 2) return {};
  std::sort(present.begin(), present.end());

  const double parent_term = gain_term(in.total_grad, in.total_hess, in.reg_lambda);

  SplitCandidate best;
  double left_grad = missing_grad;
  double left_hess = missing_hess;
  for (std::size_t i = 0; i + 1 < present.size(); ++i) {
    left_grad += in.gradients[static_cast<std::size_t>(present[i].second)];
    left_hess += in.hessians[static_cast<std::size_t>(present[i].second)];
    const double value = present[i].first;
    const double next_value = present[i + 1].first;
    if (value == next_value) continue;  // candidates sit between distinct values only

    const double threshold = std::midpoint(value, next_value);
    if (!(value < threshold)) continue;  // adjacent representables: cannot separate

    const double right_grad = in.total_grad - left_grad;
    const double right_hess = in.total_hess - left_hess;
    if (left_hess < in.min_child_weight || right_hess < in.min_child_weight) continue;

    const double gain = 0.5 * (gain_term(left_grad, left_hess, in.reg_lambda) +
                               gain_term(right_grad, right_hess, in.reg_lambda) - parent_term) -
                        in.min_split_gain;
    if (gain > 0.0 && (!best.valid || gain > best.gain)) {
      best.valid = true;
      best.gain = gain;
      best.threshold = threshold;  // ties keep the earliest, i.e. lowest, threshold
    }
  }
  return best;
}

void best_split_per_feature_serial(const SplitScanInput& in, std::span<SplitCandidate> out) {
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = scan_feature(in, f);
}

void best_split_per_feature_parallel(const SplitScanInput& in, std::span<SplitCandidate> out) {
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t f = 0; f < n; ++f)
    out[static_cast<std::size_t>(f)] = scan_feature(in, static_cast<std::size_t>(f));
}

void best_split_per_feature(const SplitScanInput& in, std::span<SplitCandidate> out,
                            ExecMode mode) {
  if (mode == ExecMode::parallel)
    best_split_per_feature_parallel(in, out);
  else
    best_split_per_feature_serial(in, out);
}

}  // namespace fedboost::gbt::kernels
