#pragma once

#include <span>
#include <vector>

#include "fedboost/data/dataset.hpp"
#include "fedboost/gbt/kernels.hpp"
#include "fedboost/gbt/types.hpp"

namespace fedboost::gbt {

// Additive ensemble inference: base_score plus every routed leaf weight.
// Total on well-formed ensembles; the feature vector must have one slot per
// feature name (NaN entries route left).
double predict(const Ensemble& ensemble, std::span<const double> features);

// Grows one regression tree by exact-greedy induction over second-order
// statistics. Split gain is
//   1/2 [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda) ] - gamma
// and a node splits only when gain > 0, both children carry hessian mass
// >= min_child_weight, and depth < max_depth. Leaf weight is
// -G/(H+lambda) * learning_rate. Ties prefer the lower feature index, then
// the lower threshold.
DecisionTree grow_tree(std::span<const double> gradients, std::span<const double> hessians,
                       const data::Dataset& dataset, const TrainConfig& config,
                       kernels::ExecMode mode = kernels::default_mode());

// Same, over a prebuilt feature matrix (used by the boosting loop).
DecisionTree grow_tree(std::span<const double> gradients, std::span<const double> hessians,
                       const data::FeatureMatrix& matrix, const TrainConfig& config,
                       kernels::ExecMode mode = kernels::default_mode());

// Boosts config.n_estimators trees against the residuals of warm_start on
// `dataset` under squared-error loss (g = yhat - y, h = 1). Returned trees
// carry client-local tree_ids 0..n-1 (the aggregator renumbers them) and
// iteration_tags continuing after warm_start's last tag.
std::vector<DecisionTree> train_local(const Ensemble& warm_start, const data::Dataset& dataset,
                                      const TrainConfig& config,
                                      kernels::ExecMode mode = kernels::default_mode());

}  // namespace fedboost::gbt
