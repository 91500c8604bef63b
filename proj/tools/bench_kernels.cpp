// Serial reference vs OpenMP kernels on a large synthetic workload.
// Build target: bench_kernels (not part of ctest). Typical invocation:
//   ./build/tools/bench_kernels --benchmark_time_unit=ms

#include <benchmark/benchmark.h>

#include "fedboost/data/synthetic.hpp"
#include "fedboost/gbt/train.hpp"

namespace {

using namespace fedboost;
using gbt::kernels::ExecMode;

// ~66k rows, 5 features, 3 node types.
const data::Dataset& bench_dataset() {
  static const data::Dataset dataset = [] {
    data::SyntheticSpec spec;
    spec.seed = 7;
    spec.node_types = {
        {.name = "a", .idle_watts = 50, .max_watts = 200, .curvature = 1.2, .noise_sd = 2.0,
         .samples_per_level = {2000}},
        {.name = "b", .idle_watts = 80, .max_watts = 300, .curvature = 0.8, .noise_sd = 2.0,
         .samples_per_level = {2000}},
        {.name = "c", .idle_watts = 100, .max_watts = 340, .curvature = 1.5, .noise_sd = 2.0,
         .samples_per_level = {2000}},
    };
    return data::gen_synthetic(spec);
  }();
  return dataset;
}

const data::FeatureMatrix& bench_matrix() {
  static const data::FeatureMatrix matrix(bench_dataset());
  return matrix;
}

gbt::TrainConfig bench_config(std::int64_t n_estimators) {
  gbt::TrainConfig config;
  config.n_estimators = n_estimators;
  config.learning_rate = 0.1;
  config.max_depth = 6;
  return config;
}

const gbt::Ensemble& bench_model() {
  static const gbt::Ensemble model = [] {
    gbt::Ensemble start;
    start.feature_names = bench_dataset().feature_names;
    gbt::Ensemble out = start;
    out.append_round(gbt::train_local(start, bench_dataset(), bench_config(64)));
    return out;
  }();
  return model;
}

void BM_PredictBatch(benchmark::State& state) {
  const auto mode = static_cast<ExecMode>(state.range(0));
  benchmark::DoNotOptimize(&bench_model());  // build outside the timed region
  std::vector<double> out(bench_matrix().rows());
  for (auto _ : state) {
    gbt::kernels::predict_batch(bench_model(), bench_matrix(), out, mode);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(out.size()));
}

void BM_SplitScan(benchmark::State& state) {
  const auto mode = static_cast<ExecMode>(state.range(0));
  const auto& matrix = bench_matrix();
  const auto targets = data::targets_of(bench_dataset());

  std::vector<double> gradients(matrix.rows());
  for (std::size_t i = 0; i < gradients.size(); ++i) gradients[i] = -targets[i];
  const std::vector<double> hessians(matrix.rows(), 1.0);
  std::vector<std::int32_t> rows(matrix.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::int32_t>(i);

  gbt::kernels::SplitScanInput in;
  in.matrix = &matrix;
  in.gradients = gradients;
  in.hessians = hessians;
  in.node_rows = rows;
  for (const auto r : rows) {
    in.total_grad += gradients[static_cast<std::size_t>(r)];
    in.total_hess += 1.0;
  }
  in.reg_lambda = 1.0;
  in.min_child_weight = 1.0;

  std::vector<gbt::kernels::SplitCandidate> out(matrix.cols());
  for (auto _ : state) {
    gbt::kernels::best_split_per_feature(in, out, mode);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_TrainLocal(benchmark::State& state) {
  const auto mode = static_cast<ExecMode>(state.range(0));
  gbt::Ensemble start;
  start.feature_names = bench_dataset().feature_names;
  for (auto _ : state) {
    auto trees = gbt::train_local(start, bench_dataset(), bench_config(8), mode);
    benchmark::DoNotOptimize(trees.data());
  }
}

}  // namespace

BENCHMARK(BM_PredictBatch)
    ->Arg(static_cast<int>(ExecMode::serial))
    ->Arg(static_cast<int>(ExecMode::parallel))
    ->ArgNames({"mode"})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SplitScan)
    ->Arg(static_cast<int>(ExecMode::serial))
    ->Arg(static_cast<int>(ExecMode::parallel))
    ->ArgNames({"mode"})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainLocal)
    ->Arg(static_cast<int>(ExecMode::serial))
    ->Arg(static_cast<int>(ExecMode::parallel))
    ->ArgNames({"mode"})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
