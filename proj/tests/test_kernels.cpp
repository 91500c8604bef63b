// The OpenMP kernels must be bit-identical to the serial reference for any
// thread count; these tests compare the two forms directly and through the
// full training path.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fedboost/data/synthetic.hpp"
#include "fedboost/gbt/serialize.hpp"
#include "fedboost/gbt/train.hpp"
#include "test_util.hpp"

using namespace fedboost;
using gbt::kernels::ExecMode;

TEST_CASE("predict_batch: parallel output equals serial bit for bit") {
  std::mt19937_64 rng(101);
  const data::Dataset dataset = testutil::random_dataset(rng, 4097, 5, 0.07);
  const data::FeatureMatrix matrix(dataset);
  const gbt::Ensemble model = testutil::random_ensemble(rng, 5, 40, 6);

  std::vector<double> serial(matrix.rows()), parallel(matrix.rows());
  gbt::kernels::predict_batch_serial(model, matrix, serial);
  gbt::kernels::predict_batch_parallel(model, matrix, parallel);
  CHECK(serial == parallel);
}

TEST_CASE("apply_tree: parallel accumulation equals serial bit for bit") {
  std::mt19937_64 rng(102);
  const data::Dataset dataset = testutil::random_dataset(rng, 2048, 4);
  const data::FeatureMatrix matrix(dataset);
  const gbt::DecisionTree tree = testutil::random_tree(rng, 4, 6);

  std::vector<double> serial(matrix.rows(), 0.5), parallel(matrix.rows(), 0.5);
  gbt::kernels::apply_tree_serial(tree, matrix, serial);
  gbt::kernels::apply_tree_parallel(tree, matrix, parallel);
  CHECK(serial == parallel);
}

TEST_CASE("split scan: parallel candidates equal serial bit for bit") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 8; ++trial) {
    const data::Dataset dataset = testutil::random_dataset(rng, 700, 7, trial % 2 ? 0.1 : 0.0);
    const data::FeatureMatrix matrix(dataset);

    std::vector<double> g, h;
    std::vector<std::int32_t> rows;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      if (i % 3 == 0) continue;  // a proper subset, as in interior tree nodes
      rows.push_back(static_cast<std::int32_t>(i));
    }
    g.resize(matrix.rows());
    h.assign(matrix.rows(), 1.0);
    for (auto& v : g) v = testutil::uniform(rng, -25.0, 25.0);

    gbt::kernels::SplitScanInput in;
    in.matrix = &matrix;
    in.gradients = g;
    in.hessians = h;
    in.node_rows = rows;
    for (const auto r : rows) {
      in.total_grad += g[static_cast<std::size_t>(r)];
      in.total_hess += h[static_cast<std::size_t>(r)];
    }
    in.reg_lambda = 1.0;
    in.min_child_weight = 1.0;

    std::vector<gbt::kernels::SplitCandidate> serial(matrix.cols()), parallel(matrix.cols());
    gbt::kernels::best_split_per_feature_serial(in, serial);
    gbt::kernels::best_split_per_feature_parallel(in, parallel);
    for (std::size_t f = 0; f < serial.size(); ++f) {
      CHECK(serial[f].valid == parallel[f].valid);
      CHECK(serial[f].gain == parallel[f].gain);
      CHECK(serial[f].threshold == parallel[f].threshold);
    }
  }
}

TEST_CASE("train_local: serial and parallel modes serialize byte-identically") {
  data::SyntheticSpec spec;
  spec.seed = 5;
  spec.node_types = {
      {.name = "a", .idle_watts = 50, .max_watts = 210, .curvature = 1.2, .noise_sd = 2.0,
       .samples_per_level = {12}},
      {.name = "b", .idle_watts = 90, .max_watts = 320, .curvature = 0.8, .noise_sd = 2.0,
       .samples_per_level = {12}},
  };
  const data::Dataset dataset = data::gen_synthetic(spec);

  gbt::TrainConfig config;
  config.n_estimators = 20;
  config.learning_rate = 0.1;
  config.max_depth = 5;

  const auto run = [&](ExecMode mode) {
    gbt::Ensemble start;
    start.feature_names = dataset.feature_names;
    gbt::Ensemble model = start;
    model.append_round(gbt::train_local(start, dataset, config, mode));
    return gbt::serialize(model);
  };
  CHECK(run(ExecMode::serial) == run(ExecMode::parallel));
}
