// fedboost command line: data generation, experiment runs, figures, model
// verification. Exit codes: 0 success, 1 runtime failure, 2 config error.

#include <CLI11.hpp>

#include <cstdio>
#include <optional>

#include "fedboost/cli/experiment.hpp"
#include "fedboost/cli/manifest.hpp"
#include "fedboost/cli/plot.hpp"
#include "fedboost/version.hpp"

namespace {

using namespace fedboost;

struct GlobalOptions {
  std::string config_path;
  std::string out_path;
  std::optional<std::int64_t> seed;
  std::string transport;
};

int cmd_gen_data(const GlobalOptions& opts) {
  data::SyntheticSpec spec;
  if (!opts.config_path.empty())
    spec = cli::load_synthetic_spec(cli::ConfigFile::parse_file(opts.config_path));
  else
    spec = cli::default_synthetic_spec();
  if (opts.seed) spec.seed = *opts.seed;
  if (opts.out_path.empty()) throw ConfigError("gen-data needs --out <csv path>");

  const data::Dataset dataset = data::gen_synthetic(spec);
  data::write_csv(dataset, opts.out_path);
  std::printf("wrote %zu rows (%zu feature columns) to %s\n", dataset.size(),
              dataset.feature_count(), opts.out_path.c_str());
  return 0;
}

int cmd_run(const GlobalOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("run needs --config <experiment file>");
  cli::ExperimentSpec spec =
      cli::load_experiment_spec(cli::ConfigFile::parse_file(opts.config_path));
  if (!opts.out_path.empty()) spec.output_dir = opts.out_path;
  if (opts.seed) spec.seeds = {*opts.seed};
  if (opts.transport == "tcp")
    spec.fed.transport = fed::TransportKind::tcp;
  else if (opts.transport == "in-process")
    spec.fed.transport = fed::TransportKind::in_process;

  const std::string config_hash = cli::sha256_file_hex(opts.config_path);
  const cli::ExperimentResult result = cli::run_experiment(spec, config_hash);

  if (result.baseline)
    std::printf("baseline          mae=%s rmse=%s (n=%zu)\n",
                real_to_string(result.baseline->mae).c_str(),
                real_to_string(result.baseline->rmse).c_str(), result.baseline->n);
  for (const auto& run : result.seed_runs)
    std::printf("seed %-4lld final   mae=%s rmse=%s (rounds=%zu)\n",
                static_cast<long long>(run.seed),
                real_to_string(run.final_aggregated.mae).c_str(),
                real_to_string(run.final_aggregated.rmse).c_str(), run.logs.size());
  std::printf("run directory: %s\n", result.run_dir.string().c_str());
  return 0;
}

int cmd_plot(const GlobalOptions& opts, const std::string& run_dir) {
  const std::filesystem::path figures =
      opts.out_path.empty() ? std::filesystem::path(run_dir) / "figures"
                            : std::filesystem::path(opts.out_path);
  const auto files = cli::plot_run(run_dir, figures);
  for (const auto& f : files) std::printf("%s\n", f.string().c_str());
  return 0;
}

int cmd_verify(const std::string& model_path) {
  const gbt::Ensemble model = gbt::read_model_file(model_path);  // parses and validates

  // Re-serialization must be byte-stable.
  const std::string once = gbt::serialize(model);
  const std::string twice = gbt::serialize(gbt::deserialize(once));
  if (once != twice) throw Error("re-serialization of '" + model_path + "' is not byte-stable");

  // Routing smoke test: every tree must reach a leaf for an all-missing row.
  const std::vector<double> missing_row(model.feature_names.size(), data::kMissing);
  const double at_missing = gbt::predict(model, missing_row);

  std::printf("model ok: %zu trees, %zu features, %zu rounds, base_score=%s, "
              "predict(all-missing)=%s\n",
              model.tree_count(), model.feature_names.size(),
              model.iteration_boundaries.size(), real_to_string(model.base_score).c_str(),
              real_to_string(at_missing).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedboost: federated gradient-boosted server power modeling"};
  app.set_version_flag("--version", fedboost::kToolVersion);
  app.fallthrough();
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "config file path");
  app.add_option("--out", opts.out_path, "output file or directory");
  app.add_option("--seed", opts.seed, "seed override");
  app.add_option("--transport", opts.transport, "federation transport")
      ->check(CLI::IsMember({"in-process", "tcp"}));

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  CLI::App* run = app.add_subcommand("run", "run the centralized baseline and federations");
  CLI::App* plot = app.add_subcommand("plot", "render metric figures for a run directory");
  std::string run_dir;
  plot->add_option("run_dir", run_dir, "run directory produced by `run`")->required();
  CLI::App* verify = app.add_subcommand("verify", "check the invariants of a model file");
  std::string model_path;
  verify->add_option("model", model_path, "model JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a config error
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opts);
    if (run->parsed()) return cmd_run(opts);
    if (plot->parsed()) return cmd_plot(opts, run_dir);
    if (verify->parsed()) return cmd_verify(model_path);
    return 2;
  } catch (const fedboost::ConfigError& e) {
    fedboost::log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    fedboost::log_error(e.what());
    return 1;
  }
}
