#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedboost/data/dataset.hpp"
#include "fedboost/gbt/train.hpp"

namespace fedboost::metrics {

// The five evaluation metrics for one model on one dataset. MAPE skips
// targets with |y| <= 1e-9 and is absent when every target is skipped; R^2
// is absent when the targets are constant.
struct MetricsReport {
  double mae = 0.0;   // watts
  double mse = 0.0;   // watts^2
  double rmse = 0.0;  // watts
  std::optional<double> mape;  // percent
  std::optional<double> r2;
  std::size_t n = 0;

  bool operator==(const MetricsReport&) const = default;
};

inline constexpr double kMapeEpsilon = 1e-9;

MetricsReport compute_metrics(std::span<const double> predictions,
                              std::span<const double> targets);

// Batch-predicts the dataset and scores it.
MetricsReport evaluate(const gbt::Ensemble& ensemble, const data::Dataset& dataset,
                       gbt::kernels::ExecMode mode = gbt::kernels::default_mode());

// Componentwise mean across client reports (the round's "aggregate" row).
// Optional metrics average over the clients where they are present. Note
// rmse is the mean of client rmse values, not sqrt of the averaged mse, so
// the single-report identity rmse^2 == mse intentionally does not hold here.
// When weight_by_samples is set, each client's metrics are weighted by its
// sample count.
MetricsReport mean_reports(std::span<const MetricsReport> reports,
                           bool weight_by_samples = false);

struct BaselineResult {
  gbt::Ensemble model;
  MetricsReport report;
};

// Centralized comparison point: one local training run over the pooled train
// split (same config as the federated clients), scored on the pooled test
// split.
BaselineResult train_centralized_baseline(const data::Dataset& pooled_train,
                                          const data::Dataset& pooled_test,
                                          const gbt::TrainConfig& config, double base_score);

// Report CSV surface: fixed column order, reals in shortest round-trip form,
// absent metrics as empty cells.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& run_id, std::int64_t round,
                            const std::string& scope, const MetricsReport& report);

}  // namespace fedboost::metrics
