#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "fedboost/gbt/serialize.hpp"
#include "fedboost/gbt/train.hpp"
#include "test_util.hpp"

using namespace fedboost;
using gbt::DecisionTree;
using gbt::Ensemble;
using gbt::TrainConfig;
using gbt::TreeNode;

namespace {

// ---------------------------------------------------------------------------
// Oracles. Each one re-derives its answer from raw node/sample data and never
// calls the implementation path it checks.
// ---------------------------------------------------------------------------

// Route-and-sum oracle for predict().
double oracle_route(const DecisionTree& tree, const std::vector<double>& x) {
  std::size_t at = 0;
  for (;;) {
    const TreeNode& node = tree.nodes[at];
    if (node.kind == TreeNode::Kind::leaf) return node.leaf_weight;
    const double v = x[static_cast<std::size_t>(node.split_feature)];
    at = static_cast<std::size_t>(std::isnan(v) || v < node.threshold ? node.left_child
                                                                      : node.right_child);
  }
}

double oracle_predict(const Ensemble& e, const std::vector<double>& x) {
  double sum = e.base_score;
  for (const auto& tree : e.trees) sum += oracle_route(tree, x);
  return sum;
}

double oracle_mse(const Ensemble& e, const data::Dataset& d) {
  double sum = 0.0;
  for (const auto& s : d.samples) {
    const double diff = oracle_predict(e, s.features) - s.target_power;
    sum += diff * diff;
  }
  return sum / static_cast<double>(d.size());
}

struct OracleSplit {
  bool found = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Exhaustive depth-1 split search: every feature, every midpoint between
// consecutive distinct values, gains computed by direct summation loops.
OracleSplit oracle_best_split(const data::Dataset& d, const std::vector<double>& g,
                              const std::vector<double>& h, double lambda, double gamma,
                              double min_child_weight) {
  const auto term = [&](double gs, double hs) { return gs * gs / (hs + lambda); };
  double total_g = 0.0, total_h = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total_g += g[i];
    total_h += h[i];
  }

  OracleSplit best;
  for (std::size_t f = 0; f < d.feature_count(); ++f) {
    std::vector<double> values;
    for (const auto& s : d.samples)
      if (!std::isnan(s.features[f])) values.push_back(s.features[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double threshold = std::midpoint(values[i], values[i + 1]);
      if (!(values[i] < threshold)) continue;
      double gl = 0.0, hl = 0.0;
      for (std::size_t r = 0; r < d.size(); ++r) {
        const double v = d.samples[r].features[f];
        if (std::isnan(v) || v < threshold) {
          gl += g[r];
          hl += h[r];
        }
      }
      const double gr = total_g - gl;
      const double hr = total_h - hl;
      if (hl < min_child_weight || hr < min_child_weight) continue;
      const double gain = 0.5 * (term(gl, hl) + term(gr, hr) - term(total_g, total_h)) - gamma;
      if (gain <= 0.0) continue;
      const bool better =
          !best.found || gain > best.gain ||
          (gain == best.gain && (static_cast<int>(f) < best.feature ||
                                 (static_cast<int>(f) == best.feature &&
                                  threshold < best.threshold)));
      if (better) {
        best.found = true;
        best.gain = gain;
        best.feature = static_cast<int>(f);
        best.threshold = threshold;
      }
    }
  }
  return best;
}

// Recomputes every leaf weight of a grown tree from the samples that route
// to it: -(sum g)/(sum h + lambda) * eta.
void check_leaf_weights(const DecisionTree& tree, const data::Dataset& d,
                        const std::vector<double>& g, const std::vector<double>& h,
                        double lambda, double eta, double tol = 1e-9) {
  std::map<std::size_t, std::pair<double, double>> leaf_stats;  // node -> (G, H)
  for (std::size_t r = 0; r < d.size(); ++r) {
    std::size_t at = 0;
    while (tree.nodes[at].kind == TreeNode::Kind::split) {
      const double v = d.samples[r].features[static_cast<std::size_t>(tree.nodes[at].split_feature)];
      at = static_cast<std::size_t>(std::isnan(v) || v < tree.nodes[at].threshold
                                        ? tree.nodes[at].left_child
                                        : tree.nodes[at].right_child);
    }
    leaf_stats[at].first += g[r];
    leaf_stats[at].second += h[r];
  }
  REQUIRE(!leaf_stats.empty());
  for (const auto& [node_id, stats] : leaf_stats) {
    const double expected = -stats.first / (stats.second + lambda) * eta;
    CHECK(std::abs(tree.nodes[node_id].leaf_weight - expected) <= tol);
  }
}

Ensemble stump_ensemble() {
  // split on feature 0 at 5.0; left leaf -1.0, right leaf 2.0; base 10.0
  Ensemble e;
  e.base_score = 10.0;
  e.feature_names = {"f0"};
  DecisionTree t;
  t.nodes.resize(3);
  t.nodes[0] = {0, TreeNode::Kind::split, 0, 5.0, 1, 2, 0.0};
  t.nodes[1] = {1, TreeNode::Kind::leaf, -1, 0.0, -1, -1, -1.0};
  t.nodes[2] = {2, TreeNode::Kind::leaf, -1, 0.0, -1, -1, 2.0};
  e.append_round({t});
  return e;
}

data::Dataset constant_target_dataset(std::size_t rows, double target) {
  std::mt19937_64 rng(99);
  data::Dataset d = testutil::random_dataset(rng, rows, 3);
  for (auto& s : d.samples) s.target_power = target;
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

TEST_CASE("predict: empty ensemble returns base score for any input") {
  Ensemble e;
  CHECK(gbt::predict(e, {}) == 0.0);
  e.base_score = 3.25;
  e.feature_names = {"a", "b"};
  const std::vector<double> x = {1.0, data::kMissing};
  CHECK(gbt::predict(e, x) == 3.25);
}

TEST_CASE("predict: one-stump traversal") {
  const Ensemble e = stump_ensemble();
  CHECK(gbt::predict(e, std::vector<double>{3.0}) == 9.0);    // 10 + (-1)
  CHECK(gbt::predict(e, std::vector<double>{7.0}) == 12.0);   // 10 + 2
  CHECK(gbt::predict(e, std::vector<double>{5.0}) == 12.0);   // threshold routes right
  CHECK(gbt::predict(e, std::vector<double>{data::kMissing}) == 9.0);  // missing routes left
}

TEST_CASE("predict: matches route-and-sum oracle on random ensembles") {
  std::mt19937_64 rng(42);
  const Ensemble e = testutil::random_ensemble(rng, 4, 10, 5);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x;
    for (int c = 0; c < 4; ++c)
      x.push_back(testutil::uniform(rng, 0.0, 1.0) < 0.1 ? data::kMissing
                                                         : testutil::uniform(rng, -60.0, 160.0));
    CHECK(gbt::predict(e, x) == oracle_predict(e, x));  // exact equality
  }
}

TEST_CASE("predict: additivity under tree concatenation") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Ensemble a = testutil::random_ensemble(rng, 3, 4, 4);
    const Ensemble b = testutil::random_ensemble(rng, 3, 3, 4);

    Ensemble combined = a;
    std::vector<DecisionTree> b_trees = b.trees;
    combined.append_round(std::move(b_trees));

    std::vector<double> x;
    for (int c = 0; c < 3; ++c) x.push_back(testutil::uniform(rng, -60.0, 160.0));
    const double lhs = gbt::predict(combined, x);
    const double rhs = gbt::predict(a, x) + gbt::predict(b, x) - b.base_score;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

// ---------------------------------------------------------------------------
// grow_tree
// ---------------------------------------------------------------------------

TEST_CASE("grow_tree: single sample closed-form Newton leaf") {
  data::Dataset d;
  d.feature_names = {"f0"};
  d.samples.push_back({{1.0}, 0.0, "t", 0.0});
  TrainConfig config;
  config.reg_lambda = 1.0;
  config.learning_rate = 0.01;

  const std::vector<double> g = {-2.0};
  const std::vector<double> h = {1.0};
  const DecisionTree tree = gbt::grow_tree(g, h, d, config);
  REQUIRE(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].kind == TreeNode::Kind::leaf);
  CHECK(tree.nodes[0].leaf_weight == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("grow_tree: all-zero gradients give a single zero leaf") {
  std::mt19937_64 rng(3);
  const data::Dataset d = testutil::random_dataset(rng, 30, 3);
  const std::vector<double> g(30, 0.0);
  const std::vector<double> h(30, 1.0);
  const DecisionTree tree = gbt::grow_tree(g, h, d, TrainConfig{});
  REQUIRE(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].leaf_weight == 0.0);
  CHECK(!std::signbit(tree.nodes[0].leaf_weight));  // canonical +0
}

TEST_CASE("grow_tree: length mismatch is a contract violation") {
  std::mt19937_64 rng(4);
  const data::Dataset d = testutil::random_dataset(rng, 10, 2);
  const std::vector<double> g(9, 1.0);
  const std::vector<double> h(10, 1.0);
  CHECK_THROWS_AS(static_cast<void>(gbt::grow_tree(g, h, d, TrainConfig{})), TrainError);
}

TEST_CASE("grow_tree: depth-1 split matches exhaustive enumeration oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const data::Dataset d = testutil::random_dataset(rng, 20, 2, trial % 3 == 0 ? 0.15 : 0.0);
    std::vector<double> g, h;
    for (std::size_t i = 0; i < d.size(); ++i) {
      g.push_back(testutil::uniform(rng, -30.0, 30.0));
      h.push_back(1.0);
    }
    TrainConfig config;
    config.max_depth = 1;
    config.reg_lambda = trial % 2 == 0 ? 1.0 : 0.0;
    config.min_child_weight = 1.0;
    config.learning_rate = 0.3;

    const DecisionTree tree = gbt::grow_tree(g, h, d, config);
    const OracleSplit expected = oracle_best_split(d, g, h, config.reg_lambda,
                                                   config.min_split_gain, config.min_child_weight);
    if (!expected.found) {
      REQUIRE(tree.nodes.size() == 1);
      continue;
    }
    REQUIRE(tree.nodes[0].kind == TreeNode::Kind::split);
    CHECK(tree.nodes[0].split_feature == expected.feature);
    CHECK(tree.nodes[0].threshold == expected.threshold);  // exact match required
    check_leaf_weights(tree, d, g, h, config.reg_lambda, config.learning_rate);
  }
}

TEST_CASE("grow_tree: every leaf weight matches the brute-force Newton formula") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const data::Dataset d = testutil::random_dataset(rng, 60, 3, 0.1);
    std::vector<double> g, h;
    for (std::size_t i = 0; i < d.size(); ++i) {
      g.push_back(testutil::uniform(rng, -40.0, 40.0));
      h.push_back(1.0);
    }
    TrainConfig config;
    config.max_depth = 4;
    config.learning_rate = 0.1;
    const DecisionTree tree = gbt::grow_tree(g, h, d, config);
    check_leaf_weights(tree, d, g, h, config.reg_lambda, config.learning_rate);
  }
}

// ---------------------------------------------------------------------------
// train_local
// ---------------------------------------------------------------------------

TEST_CASE("train_local: returns exactly n_estimators trees with continuing tags") {
  std::mt19937_64 rng(21);
  const data::Dataset d = testutil::random_dataset(rng, 40, 3);
  TrainConfig config;
  config.n_estimators = 100;
  config.learning_rate = 0.05;
  config.max_depth = 3;

  Ensemble start;
  start.feature_names = d.feature_names;
  const auto trees = gbt::train_local(start, d, config);
  REQUIRE(trees.size() == 100);
  for (std::size_t t = 0; t < trees.size(); ++t) {
    CHECK(trees[t].tree_id == static_cast<std::int64_t>(t));  // client-local ids
    CHECK(trees[t].iteration_tag == static_cast<std::int64_t>(t));
  }

  // Warm start continues the tag sequence.
  Ensemble warm = start;
  warm.append_round(std::vector<DecisionTree>(trees.begin(), trees.begin() + 10));
  config.n_estimators = 5;
  const auto more = gbt::train_local(warm, d, config);
  REQUIRE(more.size() == 5);
  CHECK(more.front().iteration_tag == 10);
  CHECK(more.back().iteration_tag == 14);
}

TEST_CASE("train_local: zero residuals produce zero-weight single leaves") {
  const double base = 17.5;
  const data::Dataset d = constant_target_dataset(25, base);
  TrainConfig config;
  config.n_estimators = 4;
  config.reg_lambda = 0.0;

  Ensemble start;
  start.base_score = base;
  start.feature_names = d.feature_names;
  const auto trees = gbt::train_local(start, d, config);
  for (const auto& tree : trees) {
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].leaf_weight == 0.0);
  }
}

TEST_CASE("train_local: empty dataset rejected") {
  data::Dataset d;
  d.feature_names = {"f0"};
  Ensemble start;
  start.feature_names = d.feature_names;
  CHECK_THROWS_AS(static_cast<void>(gbt::train_local(start, d, TrainConfig{})), TrainError);
}

TEST_CASE("train_local: training MSE is non-increasing tree by tree (oracle recomputed)") {
  std::mt19937_64 rng(33);
  const data::Dataset d = testutil::random_dataset(rng, 50, 3);
  TrainConfig config;
  config.n_estimators = 3;
  config.max_depth = 2;
  config.learning_rate = 0.4;

  Ensemble model;
  model.feature_names = d.feature_names;
  const auto trees = gbt::train_local(model, d, config);

  double previous = oracle_mse(model, d);
  for (const auto& tree : trees) {
    model.trees.push_back(tree);  // oracle only reads nodes; ids untouched
    const double now = oracle_mse(model, d);
    CHECK(now <= previous + 1e-12);
    previous = now;
  }
}

// ---------------------------------------------------------------------------
// serialize / deserialize
// ---------------------------------------------------------------------------

TEST_CASE("serialize: empty ensemble round-trips") {
  Ensemble e;
  e.feature_names = {"cpu_util"};
  const Ensemble back = gbt::deserialize(gbt::serialize(e));
  CHECK(back == e);
}

TEST_CASE("serialize: stump round-trips and still predicts 9.0") {
  const Ensemble e = stump_ensemble();
  const Ensemble back = gbt::deserialize(gbt::serialize(e));
  CHECK(back == e);
  CHECK(gbt::predict(back, std::vector<double>{3.0}) == 9.0);
}

TEST_CASE("serialize: 500 random trees re-serialize byte-identically") {
  std::mt19937_64 rng(55);
  const Ensemble e = testutil::random_ensemble(rng, 6, 500, 6, /*nasty_reals=*/true);
  const std::string once = gbt::serialize(e);
  const Ensemble back = gbt::deserialize(once);
  const std::string twice = gbt::serialize(back);
  CHECK(once == twice);
  CHECK(back == e);  // bit-exact reals survive the decimal strings
}

TEST_CASE("deserialize: distinct parse errors") {
  const Ensemble e = stump_ensemble();

  CHECK_THROWS_WITH_AS(static_cast<void>(gbt::deserialize("{not json")),
                       doctest::Contains("not valid JSON"), ParseError);

  SUBCASE("unknown schema version") {
    auto j = gbt::ensemble_to_json(e);
    j["schema_version"] = 99;
    try {
      static_cast<void>(gbt::ensemble_from_json(j));
      FAIL("expected ParseError");
    } catch (const ParseError& err) {
      CHECK(err.code() == ParseCode::unknown_schema_version);
    }
  }
  SUBCASE("duplicate tree id") {
    Ensemble dup = e;
    dup.trees.push_back(dup.trees.front());
    dup.iteration_boundaries.push_back(1);
    auto j = gbt::ensemble_to_json(dup);
    try {
      static_cast<void>(gbt::ensemble_from_json(j));
      FAIL("expected ParseError");
    } catch (const ParseError& err) {
      CHECK(err.code() == ParseCode::duplicate_tree_id);
    }
  }
  SUBCASE("dangling child index") {
    Ensemble bad = e;
    bad.trees[0].nodes[0].right_child = 12;
    auto j = gbt::ensemble_to_json(bad);
    try {
      static_cast<void>(gbt::ensemble_from_json(j));
      FAIL("expected ParseError");
    } catch (const ParseError& err) {
      CHECK(err.code() == ParseCode::dangling_child_index);
    }
  }
  SUBCASE("unknown field rejected") {
    auto j = gbt::ensemble_to_json(e);
    j["extra"] = 1;
    CHECK_THROWS_AS(static_cast<void>(gbt::ensemble_from_json(j)), ParseError);
  }
}

TEST_CASE("train determinism: identical inputs give byte-identical models") {
  std::mt19937_64 rng(77);
  const data::Dataset d = testutil::random_dataset(rng, 60, 4, 0.05);
  TrainConfig config;
  config.n_estimators = 12;
  config.learning_rate = 0.1;

  const auto run = [&] {
    Ensemble start;
    start.feature_names = d.feature_names;
    Ensemble model = start;
    model.append_round(gbt::train_local(start, d, config));
    return gbt::serialize(model);
  };
  CHECK(run() == run());
}

TEST_CASE("prediction continuity: prefix of a grown ensemble predicts like the old one") {
  std::mt19937_64 rng(88);
  const data::Dataset d = testutil::random_dataset(rng, 40, 3);
  TrainConfig config;
  config.n_estimators = 6;
  config.learning_rate = 0.2;

  Ensemble round1;
  round1.feature_names = d.feature_names;
  round1.append_round(gbt::train_local(round1, d, config));

  Ensemble round2 = round1;
  round2.append_round(gbt::train_local(round1, d, config));

  Ensemble prefix = round2;
  prefix.trees.resize(round1.trees.size());
  prefix.iteration_boundaries.resize(round1.iteration_boundaries.size());

  for (int i = 0; i < 25; ++i) {
    std::vector<double> x;
    for (int c = 0; c < 3; ++c) x.push_back(testutil::uniform(rng, -20.0, 120.0));
    CHECK(gbt::predict(prefix, x) == gbt::predict(round1, x));
  }
}
