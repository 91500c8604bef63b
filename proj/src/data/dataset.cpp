#include "fedboost/data/dataset.hpp"

namespace fedboost::data {

FeatureMatrix::FeatureMatrix(const Dataset& data)
    : rows_(data.size()), cols_(data.feature_count()), values_(rows_ * cols_, kMissing) {
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto& f = data.samples[r].features;
    for (std::size_t c = 0; c < cols_; ++c) values_[c * rows_ + r] = f[c];
  }
}

std::vector<double> targets_of(const Dataset& data) {
  std::vector<double> y;
  y.reserve(data.size());
  for (const auto& s : data.samples) y.push_back(s.target_power);
  return y;
}

}  // namespace fedboost::data
