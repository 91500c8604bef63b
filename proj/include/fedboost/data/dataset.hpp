#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fedboost/common.hpp"

namespace fedboost::data {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Feature-cell equality: two missing cells are the same value.
inline bool same_cell(double a, double b) {
  return a == b || (a != a && b != b);
}

// One observation: workload features plus measured power, tagged with the
// hardware identity and the benchmark load level.
struct Sample {
  std::vector<double> features;  // keyed by Dataset::feature_names; NaN = missing
  double target_power = 0.0;     // watts
  std::string node_type;
  double load_level = 0.0;       // percent, 0..100

  bool operator==(const Sample& other) const {
    if (target_power != other.target_power || node_type != other.node_type ||
        load_level != other.load_level || features.size() != other.features.size())
      return false;
    for (std::size_t i = 0; i < features.size(); ++i)
      if (!same_cell(features[i], other.features[i])) return false;
    return true;
  }
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> feature_names;
  bool isolated = false;  // set once idle-floor subtraction has been applied

  bool operator==(const Dataset&) const = default;

  std::size_t size() const { return samples.size(); }
  std::size_t feature_count() const { return feature_names.size(); }
};

// Column-major feature storage for the training/prediction kernels.
// Built once from a Dataset; rows keep dataset order.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(const Dataset& data);
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, kMissing) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double at(std::size_t row, std::size_t col) const { return values_[col * rows_ + row]; }
  void set(std::size_t row, std::size_t col, double v) { values_[col * rows_ + row] = v; }

  std::span<const double> column(std::size_t col) const {
    return {values_.data() + col * rows_, rows_};
  }

  // Copies one row into `out` (sized cols()).
  void row(std::size_t r, std::span<double> out) const {
    for (std::size_t c = 0; c < cols_; ++c) out[c] = at(r, c);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Targets of every sample, in dataset order.
std::vector<double> targets_of(const Dataset& data);

}  // namespace fedboost::data
