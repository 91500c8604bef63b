#include "fedboost/metrics/metrics.hpp"

#include <cmath>

namespace fedboost::metrics {

MetricsReport compute_metrics(std::span<const double> predictions,
                              std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw MetricsError("compute_metrics: " + std::to_string(predictions.size()) +
                       " predictions vs " + std::to_string(targets.size()) + " targets");
  if (targets.empty()) throw MetricsError("compute_metrics: empty input");

  const double n = static_cast<double>(targets.size());
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double target_sum = 0.0;
  double pct_sum = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = predictions[i] - targets[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    target_sum += targets[i];
    if (std::abs(targets[i]) > kMapeEpsilon) {
      pct_sum += std::abs(d) / std::abs(targets[i]);
      ++pct_count;
    }
  }

  MetricsReport report;
  report.n = targets.size();
  report.mae = abs_sum / n;
  report.mse = sq_sum / n;
  report.rmse = std::sqrt(report.mse);
  if (pct_count > 0) report.mape = pct_sum / static_cast<double>(pct_count) * 100.0;

  const double mean = target_sum / n;
  double var_sum = 0.0;
  for (const double y : targets) {
    const double c = y - mean;
    var_sum += c * c;
  }
  if (var_sum > 0.0) report.r2 = 1.0 - sq_sum / var_sum;
  return report;
}

MetricsReport evaluate(const gbt::Ensemble& ensemble, const data::Dataset& dataset,
                       gbt::kernels::ExecMode mode) {
  const data::FeatureMatrix matrix(dataset);
  std::vector<double> preds(dataset.size());
  gbt::kernels::predict_batch(ensemble, matrix, preds, mode);
  return compute_metrics(preds, data::targets_of(dataset));
}

MetricsReport mean_reports(std::span<const MetricsReport> reports, bool weight_by_samples) {
  if (reports.empty()) throw MetricsError("mean_reports: no reports");

  MetricsReport out;
  double weight_sum = 0.0;
  double mape_weight = 0.0;
  double r2_weight = 0.0;
  double mape_sum = 0.0;
  double r2_sum = 0.0;
  for (const MetricsReport& r : reports) {
    const double w = weight_by_samples ? static_cast<double>(r.n) : 1.0;
    weight_sum += w;
    out.mae += w * r.mae;
    out.mse += w * r.mse;
    out.rmse += w * r.rmse;
    if (r.mape) {
      mape_sum += w * *r.mape;
      mape_weight += w;
    }
    if (r.r2) {
      r2_sum += w * *r.r2;
      r2_weight += w;
    }
    out.n += r.n;
  }
  if (weight_sum <= 0.0) throw MetricsError("mean_reports: zero total weight");
  out.mae /= weight_sum;
  out.mse /= weight_sum;
  out.rmse /= weight_sum;
  if (mape_weight > 0.0) out.mape = mape_sum / mape_weight;
  if (r2_weight > 0.0) out.r2 = r2_sum / r2_weight;
  return out;
}

BaselineResult train_centralized_baseline(const data::Dataset& pooled_train,
                                          const data::Dataset& pooled_test,
                                          const gbt::TrainConfig& config, double base_score) {
  gbt::Ensemble start;
  start.base_score = base_score;
  start.feature_names = pooled_train.feature_names;

  std::vector<gbt::DecisionTree> trees = gbt::train_local(start, pooled_train, config);

  BaselineResult result;
  result.model = std::move(start);
  result.model.append_round(std::move(trees));
  result.report = evaluate(result.model, pooled_test);
  return result;
}

std::string metrics_csv_header() { return "run_id,round,scope,mae,mse,rmse,mape,r2,n"; }

std::string metrics_csv_row(const std::string& run_id, std::int64_t round,
                            const std::string& scope, const MetricsReport& report) {
  std::string row = run_id;
  row += ',';
  row += std::to_string(round);
  row += ',';
  row += scope;
  row += ',';
  row += real_to_string(report.mae);
  row += ',';
  row += real_to_string(report.mse);
  row += ',';
  row += real_to_string(report.rmse);
  row += ',';
  if (report.mape) row += real_to_string(*report.mape);
  row += ',';
  if (report.r2) row += real_to_string(*report.r2);
  row += ',';
  row += std::to_string(report.n);
  return row;
}

}  // namespace fedboost::metrics
