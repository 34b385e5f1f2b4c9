#include <cmath>
#include <random>

#include "doctest.h"

#include "anchoropt/errors.hpp"
#include "anchoropt/random_forest.hpp"

using namespace anchoropt;

namespace {

double step(const std::vector<double>& x) { return x[0] < 0.5 ? 1.0 : 3.0; }

}  // namespace

TEST_CASE("single tree without bootstrap fits training data exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    X.push_back({u(rng), u(rng)});
    y.push_back(std::sin(6 * X.back()[0]) + X.back()[1]);
  }
  ForestOptions opt;
  opt.num_trees = 2;
  opt.bootstrap = false;
  opt.feature_fraction = 1.0;
  opt.min_samples_split = 2;
  const auto forest = RandomForest::fit(X, y, opt);
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (const auto& tree : forest.trees()) CHECK(tree.predict(X[i]) == doctest::Approx(y[i]).epsilon(1e-12));
    // Identical trees: spread is only the floor.
    CHECK(forest.predict(X[i]).variance == kForestVarianceFloor);
  }
}

TEST_CASE("midpoint thresholds on a step function") {
  const std::vector<std::vector<double>> X{{0.1}, {0.2}, {0.4}, {0.6}, {0.8}, {0.9}};
  std::vector<double> y;
  for (const auto& x : X) y.push_back(step(x));
  ForestOptions opt;
  opt.num_trees = 2;
  opt.bootstrap = false;
  const auto forest = RandomForest::fit(X, y, opt);
  const auto& nodes = forest.trees()[0].nodes();
  REQUIRE(nodes.size() == 3);
  CHECK(nodes[0].feature == 0);
  CHECK(nodes[0].threshold == doctest::Approx(0.5));
  const std::vector<double> lo{0.45}, hi{0.55};
  CHECK(forest.predict(lo).mean == 1.0);
  CHECK(forest.predict(hi).mean == 3.0);
}

TEST_CASE("mean and variance are the average and spread of tree outputs") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    X.push_back({u(rng), u(rng), u(rng)});
    y.push_back(X.back()[0] * 4 - X.back()[2]);
  }
  ForestOptions opt;
  opt.seed = 5;
  const auto forest = RandomForest::fit(X, y, opt);
  CHECK(forest.trees().size() == 10);
  const std::vector<double> q{0.3, 0.6, 0.1};
  std::vector<double> outs;
  for (const auto& t : forest.trees()) outs.push_back(t.predict(q));
  double m = 0.0;
  for (double o : outs) m += o;
  m /= outs.size();
  double v = 0.0;
  for (double o : outs) v += (o - m) * (o - m);
  v /= outs.size();
  const auto p = forest.predict(q);
  CHECK(p.mean == doctest::Approx(m).epsilon(1e-12));
  CHECK(p.variance == doctest::Approx(std::max(v, kForestVarianceFloor)).epsilon(1e-9));
}

TEST_CASE("seeded fits are reproducible") {
  std::vector<std::vector<double>> X{{0.1, 0.2}, {0.4, 0.1}, {0.9, 0.5}, {0.3, 0.8}, {0.7, 0.7}};
  std::vector<double> y{1, 2, 3, 4, 5};
  ForestOptions opt;
  opt.seed = 9;
  const auto a = RandomForest::fit(X, y, opt);
  const auto b = RandomForest::fit(X, y, opt);
  const std::vector<double> q{0.5, 0.5};
  CHECK(a.predict(q).mean == b.predict(q).mean);
  CHECK(a.predict(q).variance == b.predict(q).variance);
}

TEST_CASE("min_samples_leaf and max_depth limit growth") {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 32; ++i) {
    X.push_back({i / 32.0});
    y.push_back(i * i);
  }
  ForestOptions opt;
  opt.num_trees = 2;
  opt.bootstrap = false;
  opt.max_depth = 2;
  auto forest = RandomForest::fit(X, y, opt);
  CHECK(forest.trees()[0].nodes().size() <= 7);

  opt.max_depth = 0;
  opt.min_samples_leaf = 8;
  forest = RandomForest::fit(X, y, opt);
  // Leaves of at least 8 samples out of 32: at most 4 leaves.
  int leaves = 0;
  for (const auto& n : forest.trees()[0].nodes()) leaves += n.feature < 0 ? 1 : 0;
  CHECK(leaves <= 4);
}

TEST_CASE("forest input validation") {
  const std::vector<std::vector<double>> X{{0.1}, {0.5}};
  const std::vector<double> y1{1.0};
  CHECK_THROWS_AS(RandomForest::fit(X, y1), ContractError);
  const std::vector<double> y2{1.0, 2.0};
  ForestOptions opt;
  opt.num_trees = 1;
  CHECK_THROWS_AS(RandomForest::fit(X, y2, opt), ContractError);
  const std::vector<std::vector<double>> ragged{{0.1}, {0.5, 0.2}};
  CHECK_THROWS_AS(RandomForest::fit(ragged, y2), ContractError);
}
