#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedboost/cli/config_file.hpp"
#include "fedboost/data/pipeline.hpp"
#include "fedboost/data/synthetic.hpp"
#include "fedboost/fed/orchestrator.hpp"

namespace fedboost::cli {

// Built-in generator defaults: three heterogeneous node types, 40 samples
// per load level each (1,320 rows), distinct idle/max watt curves.
data::SyntheticSpec default_synthetic_spec();

struct DataSource {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  data::SyntheticSpec synthetic = default_synthetic_spec();
  std::filesystem::path csv_path;
};

// Everything one `run` invocation needs. Loaded from the config file; the
// per-run seed list drives both the partition shuffle and the train config.
struct ExperimentSpec {
  std::string name = "experiment";
  DataSource source;
  data::FeatureGroup feature_group = data::FeatureGroup::bpf_only;
  std::vector<std::string> bpf_whitelist = data::default_bpf_whitelist();
  bool isolate_idle = true;
  data::PartitionPlan plan;
  fed::FedConfig fed;
  bool run_baseline = true;
  std::vector<std::int64_t> seeds = {1, 2, 3};
  std::filesystem::path output_dir;

  void validate() const;
};

// Loaders; every unknown key or out-of-domain value raises ConfigError.
data::SyntheticSpec load_synthetic_spec(const ConfigFile& config);
ExperimentSpec load_experiment_spec(const ConfigFile& config);

// Builds the experiment's working dataset: load or generate, then idle
// isolation, then feature-group selection.
data::Dataset prepare_dataset(const ExperimentSpec& spec);

// Pools per-client splits back together (client order, sample order kept)
// for the centralized baseline.
data::Dataset pool_train(const std::vector<data::ClientSplit>& splits);
data::Dataset pool_test(const std::vector<data::ClientSplit>& splits);

struct SeedRunResult {
  std::int64_t seed = 0;
  std::vector<fed::RoundLog> logs;
  metrics::MetricsReport final_aggregated;
};

struct ExperimentResult {
  std::filesystem::path run_dir;
  std::optional<metrics::MetricsReport> baseline;
  std::vector<SeedRunResult> seed_runs;
};

// Executes the baseline (when toggled) and one federation per seed, writing
//   <out>/manifest.json
//   <out>/baseline/{model.json,metrics.csv}
//   <out>/seed-<s>/{rounds.csv,final_model.json}
// The directory is assembled under a temporary name and swapped in on
// success, so a failed run leaves no partial output.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& config_sha256);

}  // namespace fedboost::cli
