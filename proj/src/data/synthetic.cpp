#include "fedboost/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fedboost::data {

const std::vector<std::string>& synthetic_feature_names() {
  static const std::vector<std::string> names = {"cpu_util", "bpf_instructions",
                                                 "bpf_cache_misses", "mem_usage", "disk_io"};
  return names;
}

namespace {

void validate_spec(const SyntheticSpec& spec) {
  if (spec.node_types.empty()) throw ConfigError("synthetic spec defines no node_types");
  std::set<std::string> seen;
  for (const NodeTypeSpec& t : spec.node_types) {
    if (t.name.empty()) throw ConfigError("synthetic node_type with empty name");
    if (t.name.find(',') != std::string::npos || t.name.find('\n') != std::string::npos)
      throw ConfigError("node_type '" + t.name + "' is not CSV-safe");
    if (!seen.insert(t.name).second) throw ConfigError("duplicate node_type '" + t.name + "'");
    if (t.max_watts < t.idle_watts)
      throw ConfigError("node_type '" + t.name + "': max_watts " +
                        real_to_string(t.max_watts) + " < idle_watts " +
                        real_to_string(t.idle_watts));
    if (t.idle_watts < 0.0) throw ConfigError("node_type '" + t.name + "': negative idle_watts");
    if (!(t.curvature > 0.0)) throw ConfigError("node_type '" + t.name + "': curvature must be > 0");
    if (t.noise_sd < 0.0) throw ConfigError("node_type '" + t.name + "': negative noise_sd");
    if (t.samples_per_level.size() != 1 && t.samples_per_level.size() != kLoadLevels.size())
      throw ConfigError("node_type '" + t.name + "': samples_per_level needs 1 or " +
                        std::to_string(kLoadLevels.size()) + " entries");
    for (const std::int64_t c : t.samples_per_level)
      if (c < 1)
        throw ConfigError("node_type '" + t.name + "': non-positive sample count " +
                          std::to_string(c));
  }
}

}  // namespace

Dataset gen_synthetic(const SyntheticSpec& spec) {
  validate_spec(spec);

  Dataset data;
  data.feature_names = synthetic_feature_names();

  Rng rng(static_cast<std::uint64_t>(spec.seed));
  for (const NodeTypeSpec& t : spec.node_types) {
    const double span = t.max_watts - t.idle_watts;
    const double instr_scale = t.instr_scale >= 0.0 ? t.instr_scale : 8.0 * std::max(span, 1.0);
    const double cache_scale = t.cache_scale >= 0.0 ? t.cache_scale : std::max(t.idle_watts, 1.0);

    for (std::size_t level = 0; level < kLoadLevels.size(); ++level) {
      const double load = kLoadLevels[level];
      const std::int64_t count =
          t.samples_per_level.size() == 1 ? t.samples_per_level[0] : t.samples_per_level[level];
      for (std::int64_t i = 0; i < count; ++i) {
        // Draw order is part of the format: power, cpu, instr, cache, mem, disk.
        const double power_noise = rng.normal(0.0, t.noise_sd);
        const double cpu = std::clamp(load + rng.normal(0.0, 1.5), 0.0, 100.0);
        const double instr = instr_scale * (load / 100.0) + rng.normal(0.0, instr_scale * 0.02);
        const double cache =
            cache_scale * std::pow(load / 100.0, 1.1) + rng.normal(0.0, cache_scale * 0.03);
        const double mem = 20.0 + 0.55 * load + rng.normal(0.0, 2.0);
        const double disk = 4.0 + 0.25 * load + rng.normal(0.0, 1.0);

        Sample s;
        s.node_type = t.name;
        s.load_level = load;
        s.target_power =
            std::max(0.0, t.idle_watts + span * std::pow(load / 100.0, t.curvature) + power_noise);
        s.features = {cpu, instr, cache, mem, disk};
        data.samples.push_back(std::move(s));
      }
    }
  }
  return data;
}

}  // namespace fedboost::data
