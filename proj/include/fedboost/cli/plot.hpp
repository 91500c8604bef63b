#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedboost/common.hpp"

namespace fedboost::cli {

// Parsed view of one rounds.csv / metrics.csv row.
struct MetricRow {
  std::string run_id;
  std::int64_t round = 0;
  std::string scope;
  std::map<std::string, std::optional<double>> values;  // metric name -> value
  std::size_t n = 0;
};

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

// Produces, per metric, a line chart (rounds on x, one series per client,
// one aggregate, one flat baseline) averaged across the run's seeds, plus
// the averaged CSV behind it:
//   <figures_dir>/<metric>.svg
//   <figures_dir>/<metric>_mean.csv
// Returns the emitted file paths. Missing inputs raise one Error listing
// every absent file.
std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir,
                                            const std::filesystem::path& figures_dir);

}  // namespace fedboost::cli
