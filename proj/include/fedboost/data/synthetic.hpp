#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedboost/data/dataset.hpp"

namespace fedboost::data {

// Generated load levels, percent.
inline constexpr std::array<double, 11> kLoadLevels = {0,  10, 20, 30, 40, 50,
                                                       60, 70, 80, 90, 100};

// Synthetic feature schema, in column order:
//   cpu_util          load plus gaussian jitter, clamped to [0, 100]
//   bpf_instructions  instr_scale * load/100 plus jitter (kernel-counter style)
//   bpf_cache_misses  cache_scale * (load/100)^1.1 plus jitter
//   mem_usage         20 + 0.55 * load plus jitter
//   disk_io           4 + 0.25 * load plus jitter
const std::vector<std::string>& synthetic_feature_names();

struct NodeTypeSpec {
  std::string name;
  double idle_watts = 0.0;
  double max_watts = 0.0;
  double curvature = 1.0;  // power curve exponent, > 0
  double noise_sd = 0.0;   // gaussian watts noise
  // One entry (applied to every load level) or exactly one per load level.
  std::vector<std::int64_t> samples_per_level = {1};
  // Counter feature scales; negative means "derive from the watt curve",
  // which makes heterogeneous node_types separable by their counters.
  double instr_scale = -1.0;
  double cache_scale = -1.0;
};

struct SyntheticSpec {
  std::vector<NodeTypeSpec> node_types;
  std::int64_t seed = 0;
};

// Power = idle + (max-idle) * (load/100)^curvature + N(0, noise_sd), clamped
// at zero. One RNG stream, fixed draw order, so a fixed seed regenerates the
// dataset byte-identically.
Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace fedboost::data
