#include "fedboost/cli/experiment.hpp"

#include <fstream>
#include <set>

#include "fedboost/cli/manifest.hpp"
#include "fedboost/version.hpp"

namespace fedboost::cli {

data::SyntheticSpec default_synthetic_spec() {
  data::SyntheticSpec spec;
  spec.seed = 0;
  spec.node_types = {
      {.name = "edge-small", .idle_watts = 45, .max_watts = 180, .curvature = 1.3,
       .noise_sd = 2.0, .samples_per_level = {40}},
      {.name = "rack-medium", .idle_watts = 70, .max_watts = 260, .curvature = 0.9,
       .noise_sd = 2.0, .samples_per_level = {40}},
      {.name = "rack-large", .idle_watts = 95, .max_watts = 310, .curvature = 1.6,
       .noise_sd = 2.0, .samples_per_level = {40}},
  };
  return spec;
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  std::set<std::int64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw ConfigError("duplicate seeds in experiment");
  if (output_dir.empty()) throw ConfigError("experiment output directory not set");
  fed.validate();
  if (fed.num_clients != plan.num_clients)
    throw ConfigError("federation num_clients and partition num_clients disagree");
}

data::SyntheticSpec load_synthetic_spec(const ConfigFile& config) {
  data::SyntheticSpec spec;
  if (config.has_section("synthetic")) {
    config.expect_keys("synthetic", {"seed"});
    spec.seed = config.get_int_or("synthetic", "seed", 0);
  }

  const auto sections = config.sections_with_prefix("synthetic.node.");
  if (sections.empty()) {
    data::SyntheticSpec defaults = default_synthetic_spec();
    defaults.seed = spec.seed;
    return defaults;
  }

  for (const std::string& section : sections) {
    config.expect_keys(section, {"idle_watts", "max_watts", "curvature", "noise_sd",
                                 "samples_per_level", "instr_scale", "cache_scale"});
    data::NodeTypeSpec node;
    node.name = section.substr(std::string("synthetic.node.").size());
    node.idle_watts = config.get_real(section, "idle_watts");
    node.max_watts = config.get_real(section, "max_watts");
    node.curvature = config.get_real_or(section, "curvature", 1.0);
    node.noise_sd = config.get_real_or(section, "noise_sd", 0.0);
    if (config.has(section, "samples_per_level"))
      node.samples_per_level = config.get_int_list(section, "samples_per_level");
    node.instr_scale = config.get_real_or(section, "instr_scale", -1.0);
    node.cache_scale = config.get_real_or(section, "cache_scale", -1.0);
    spec.node_types.push_back(std::move(node));
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const ConfigFile& config) {
  ExperimentSpec spec;

  if (config.has_section("experiment")) {
    config.expect_keys("experiment", {"name", "seeds", "baseline", "output"});
    spec.name = config.get_string_or("experiment", "name", "experiment");
    if (config.has("experiment", "seeds")) spec.seeds = config.get_int_list("experiment", "seeds");
    spec.run_baseline = config.get_bool_or("experiment", "baseline", true);
    if (config.has("experiment", "output"))
      spec.output_dir = config.get_string("experiment", "output");
  }

  if (config.has_section("data")) {
    config.expect_keys("data", {"source", "csv_path", "feature_group", "bpf_whitelist",
                                "isolate_idle"});
    const std::string source = config.get_string_or("data", "source", "synthetic");
    if (source == "synthetic") {
      spec.source.kind = DataSource::Kind::synthetic;
      spec.source.synthetic = load_synthetic_spec(config);
    } else if (source == "csv") {
      spec.source.kind = DataSource::Kind::csv;
      spec.source.csv_path = config.get_string("data", "csv_path");
    } else {
      throw ConfigError(config.origin() + ": [data] source must be synthetic or csv, got '" +
                        source + "'");
    }
    const std::string group = config.get_string_or("data", "feature_group", "bpf_only");
    if (group == "bpf_only")
      spec.feature_group = data::FeatureGroup::bpf_only;
    else if (group == "all")
      spec.feature_group = data::FeatureGroup::all;
    else
      throw ConfigError(config.origin() + ": [data] feature_group must be bpf_only or all");
    if (config.has("data", "bpf_whitelist"))
      spec.bpf_whitelist = config.get_string_list("data", "bpf_whitelist");
    spec.isolate_idle = config.get_bool_or("data", "isolate_idle", true);
  } else {
    spec.source.synthetic = load_synthetic_spec(config);
  }

  if (config.has_section("partition")) {
    config.expect_keys("partition", {"num_clients", "test_fraction", "assignment"});
    spec.plan.num_clients =
        static_cast<std::int32_t>(config.get_int_or("partition", "num_clients", 1));
    spec.plan.test_fraction = config.get_real_or("partition", "test_fraction", 0.2);
    if (config.has("partition", "assignment")) {
      for (const std::string& pair : config.get_string_list("partition", "assignment")) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == pair.size())
          throw ConfigError(config.origin() + ": [partition] assignment entries are 'type:client'");
        const std::string type = pair.substr(0, colon);
        try {
          spec.plan.assignment[type] = std::stoi(pair.substr(colon + 1));
        } catch (const std::exception&) {
          throw ConfigError(config.origin() + ": [partition] bad client index in '" + pair + "'");
        }
      }
    }
  }

  if (config.has_section("federation")) {
    config.expect_keys("federation", {"rounds", "base_score", "transport", "listen_address",
                                      "round_timeout_s", "weighted_metrics"});
    spec.fed.num_rounds = config.get_int_or("federation", "rounds", 1);
    spec.fed.base_score = config.get_real_or("federation", "base_score", 0.0);
    const std::string transport = config.get_string_or("federation", "transport", "in-process");
    if (transport == "in-process")
      spec.fed.transport = fed::TransportKind::in_process;
    else if (transport == "tcp")
      spec.fed.transport = fed::TransportKind::tcp;
    else
      throw ConfigError(config.origin() + ": [federation] transport must be in-process or tcp");
    spec.fed.listen_address =
        config.get_string_or("federation", "listen_address", "127.0.0.1:0");
    spec.fed.round_timeout_s = config.get_real_or("federation", "round_timeout_s", 120.0);
    spec.fed.weighted_metrics = config.get_bool_or("federation", "weighted_metrics", false);
  }
  spec.fed.num_clients = spec.plan.num_clients;

  if (config.has_section("train")) {
    config.expect_keys("train", {"n_estimators", "learning_rate", "max_depth", "reg_lambda",
                                 "min_split_gain", "min_child_weight"});
    auto& t = spec.fed.train_config;
    t.n_estimators = config.get_int_or("train", "n_estimators", 100);
    t.learning_rate = config.get_real_or("train", "learning_rate", 0.01);
    t.max_depth = static_cast<std::int32_t>(config.get_int_or("train", "max_depth", 6));
    t.reg_lambda = config.get_real_or("train", "reg_lambda", 1.0);
    t.min_split_gain = config.get_real_or("train", "min_split_gain", 0.0);
    t.min_child_weight = config.get_real_or("train", "min_child_weight", 1.0);
  }

  return spec;
}

data::Dataset prepare_dataset(const ExperimentSpec& spec) {
  data::Dataset raw = spec.source.kind == DataSource::Kind::synthetic
                          ? data::gen_synthetic(spec.source.synthetic)
                          : data::ingest_csv(spec.source.csv_path);
  if (spec.isolate_idle) raw = data::min_idle_isolate(raw);
  return data::select_feature_group(raw, spec.feature_group, spec.bpf_whitelist);
}

namespace {

void pool_into(data::Dataset& pooled, const data::Dataset& part) {
  pooled.feature_names = part.feature_names;
  pooled.isolated = part.isolated;
  pooled.samples.insert(pooled.samples.end(), part.samples.begin(), part.samples.end());
}

}  // namespace

data::Dataset pool_train(const std::vector<data::ClientSplit>& splits) {
  data::Dataset pooled;
  for (const auto& split : splits) pool_into(pooled, split.train);
  return pooled;
}

data::Dataset pool_test(const std::vector<data::ClientSplit>& splits) {
  data::Dataset pooled;
  for (const auto& split : splits) pool_into(pooled, split.test);
  return pooled;
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::string rounds_csv(std::int64_t seed, const std::vector<fed::RoundLog>& logs) {
  std::string csv = metrics::metrics_csv_header() + "\n";
  const std::string run_id = std::to_string(seed);
  for (const fed::RoundLog& log : logs) {
    for (std::size_t k = 0; k < log.client_reports.size(); ++k)
      csv += metrics::metrics_csv_row(run_id, log.round, "client:" + std::to_string(k),
                                      log.client_reports[k]) +
             "\n";
    csv += metrics::metrics_csv_row(run_id, log.round, "aggregate", log.aggregated) + "\n";
  }
  return csv;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& config_sha256) {
  spec.validate();

  const data::Dataset dataset = prepare_dataset(spec);

  // Assemble under a scratch name; swap in atomically at the end.
  const std::filesystem::path final_dir = spec.output_dir;
  const std::filesystem::path work_dir = spec.output_dir.string() + ".partial";
  std::filesystem::remove_all(work_dir);
  std::filesystem::create_directories(work_dir);

  ExperimentResult result;
  result.run_dir = final_dir;

  Manifest manifest;
  manifest.experiment_name = spec.name;
  manifest.config_sha256 = config_sha256;
  manifest.seeds = spec.seeds;
  manifest.tool_version = kToolVersion;
  manifest.model_schema_version = gbt::kEnsembleSchemaVersion;
  manifest.protocol_version = fed::kProtocolVersion;
  manifest.equivalence_mode = spec.fed.num_clients == 1;
  if (spec.source.kind == DataSource::Kind::synthetic)
    manifest.data_source = "synthetic(seed=" + std::to_string(spec.source.synthetic.seed) + ")";
  else
    manifest.data_source = "csv:" + spec.source.csv_path.string() +
                           " sha256=" + sha256_file_hex(spec.source.csv_path);

  auto add_file = [&](const std::filesystem::path& relative) {
    manifest.files.push_back(
        {relative.generic_string(), sha256_file_hex(work_dir / relative)});
  };

  try {
    if (spec.run_baseline) {
      // The baseline pools the splits of the first seed's partition.
      data::PartitionPlan plan = spec.plan;
      plan.split_seed = spec.seeds.front();
      const auto splits = data::partition(dataset, plan);
      const metrics::BaselineResult baseline = metrics::train_centralized_baseline(
          pool_train(splits), pool_test(splits), spec.fed.train_config, spec.fed.base_score);
      result.baseline = baseline.report;

      std::filesystem::create_directories(work_dir / "baseline");
      gbt::write_model_file(baseline.model, work_dir / "baseline" / "model.json");
      write_text_file(work_dir / "baseline" / "metrics.csv",
                      metrics::metrics_csv_header() + "\n" +
                          metrics::metrics_csv_row("baseline", 0, "baseline", baseline.report) +
                          "\n");
      add_file(std::filesystem::path("baseline") / "model.json");
      add_file(std::filesystem::path("baseline") / "metrics.csv");
      log_info("baseline mae=" + real_to_string(baseline.report.mae) +
               " rmse=" + real_to_string(baseline.report.rmse));
    }

    for (const std::int64_t seed : spec.seeds) {
      data::PartitionPlan plan = spec.plan;
      plan.split_seed = seed;
      const auto splits = data::partition(dataset, plan);

      fed::FedConfig fed_config = spec.fed;
      fed_config.train_config.seed = seed;

      const std::string seed_dir = "seed-" + std::to_string(seed);
      std::filesystem::create_directories(work_dir / seed_dir);
      fed::FederationResult fed_result = fed::run_federation_to_file(
          fed_config, splits, work_dir / seed_dir / "final_model.json");
      write_text_file(work_dir / seed_dir / "rounds.csv", rounds_csv(seed, fed_result.logs));
      add_file(std::filesystem::path(seed_dir) / "final_model.json");
      add_file(std::filesystem::path(seed_dir) / "rounds.csv");

      SeedRunResult run;
      run.seed = seed;
      run.final_aggregated = fed_result.logs.back().aggregated;
      run.logs = std::move(fed_result.logs);
      result.seed_runs.push_back(std::move(run));
    }

    write_manifest(manifest, work_dir / "manifest.json");
  } catch (...) {
    std::filesystem::remove_all(work_dir);  // no partial run directory
    throw;
  }

  std::filesystem::remove_all(final_dir);
  std::filesystem::rename(work_dir, final_dir);
  return result;
}

}  // namespace fedboost::cli
