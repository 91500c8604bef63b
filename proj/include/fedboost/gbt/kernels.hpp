#pragma once

#include <cstdint>
#include <span>

#include "fedboost/data/dataset.hpp"
#include "fedboost/gbt/types.hpp"

// Data-parallel inner loops of the boosting kernel. Every kernel exists in a
// serial reference form and an OpenMP form; the parallel form partitions work
// so that each output slot is produced by exactly the same floating-point
// expression as the serial form, making results bit-identical regardless of
// thread count. Tests assert that equivalence; the bench target compares
// their throughput.

namespace fedboost::gbt::kernels {

enum class ExecMode { serial, parallel };

// Default mode: parallel when built with OpenMP, serial otherwise.
ExecMode default_mode();

// Routes one matrix row through a tree (missing values go left).
double route_row(const DecisionTree& tree, const data::FeatureMatrix& m, std::size_t row);

// out[r] = base_score + sum of routed leaf weights over all trees.
void predict_batch_serial(const Ensemble& ensemble, const data::FeatureMatrix& m,
                          std::span<double> out);
void predict_batch_parallel(const Ensemble& ensemble, const data::FeatureMatrix& m,
                            std::span<double> out);
void predict_batch(const Ensemble& ensemble, const data::FeatureMatrix& m, std::span<double> out,
                   ExecMode mode = default_mode());

// preds[r] += routed leaf weight of `tree` for every row.
void apply_tree_serial(const DecisionTree& tree, const data::FeatureMatrix& m,
                       std::span<double> preds);
void apply_tree_parallel(const DecisionTree& tree, const data::FeatureMatrix& m,
                         std::span<double> preds);
void apply_tree(const DecisionTree& tree, const data::FeatureMatrix& m, std::span<double> preds,
                ExecMode mode = default_mode());

// Best exact-greedy split of one tree node, evaluated independently per
// feature. Candidate thresholds are midpoints between consecutive distinct
// sorted present values; rows with a missing value always route left.
struct SplitCandidate {
  bool valid = false;
  double gain = 0.0;
  double threshold = 0.0;
};

struct SplitScanInput {
  const data::FeatureMatrix* matrix = nullptr;
  std::span<const double> gradients;        // per dataset row
  std::span<const double> hessians;         // per dataset row
  std::span<const std::int32_t> node_rows;  // ascending row indices of the node
  double total_grad = 0.0;                  // sums over node_rows
  double total_hess = 0.0;
  double reg_lambda = 0.0;
  double min_split_gain = 0.0;
  double min_child_weight = 0.0;
};

// out has one slot per feature column.
void best_split_per_feature_serial(const SplitScanInput& in, std::span<SplitCandidate> out);
void best_split_per_feature_parallel(const SplitScanInput& in, std::span<SplitCandidate> out);
void best_split_per_feature(const SplitScanInput& in, std::span<SplitCandidate> out,
                            ExecMode mode = default_mode());

}  // namespace fedboost::gbt::kernels
