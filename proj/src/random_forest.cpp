#include "anchoropt/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "anchoropt/errors.hpp"
#include "anchoropt/random.hpp"

namespace anchoropt {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double sse = 0.0;
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const std::vector<double>> X, std::span<const double> y,
              const ForestOptions& options, Rng& rng)
      : X_(X), y_(y), options_(options), rng_(rng), dim_(X.front().size()) {
    features_.resize(dim_);
    std::iota(features_.begin(), features_.end(), 0);
    const auto wanted = static_cast<std::size_t>(std::ceil(options.feature_fraction * static_cast<double>(dim_)));
    features_per_split_ = std::clamp<std::size_t>(wanted, 1, dim_);
  }

  int build(std::vector<std::size_t>& idx, int depth, std::vector<RegressionTree::Node>& nodes) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    double sum = 0.0;
    for (auto i : idx) sum += y_[i];
    nodes[id].value = sum / static_cast<double>(idx.size());

    const bool depth_ok = options_.max_depth <= 0 || depth < options_.max_depth;
    if (!depth_ok || idx.size() < static_cast<std::size_t>(std::max(options_.min_samples_split, 2))) {
      return id;
    }
    const Split split = best_split(idx);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto i : idx) {
      (X_[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    nodes[id].feature = split.feature;
    nodes[id].threshold = split.threshold;
    const int l = build(left, depth + 1, nodes);
    nodes[id].left = l;
    const int r = build(right, depth + 1, nodes);
    nodes[id].right = r;
    return id;
  }

 private:
  Split best_split(const std::vector<std::size_t>& idx) {
    std::vector<int> candidates = features_;
    std::shuffle(candidates.begin(), candidates.end(), rng_);
    candidates.resize(features_per_split_);
    std::sort(candidates.begin(), candidates.end());

    double total = 0.0;
    double total_sq = 0.0;
    for (auto i : idx) {
      total += y_[i];
      total_sq += y_[i] * y_[i];
    }
    const double n = static_cast<double>(idx.size());
    const double parent_sse = total_sq - total * total / n;
    Split best;
    best.sse = parent_sse;
    // Pure node: nothing to gain.
    if (parent_sse <= 1e-15 * std::max(1.0, total_sq)) return {};

    const auto min_leaf = static_cast<std::size_t>(std::max(options_.min_samples_leaf, 1));
    std::vector<std::size_t> order(idx);
    for (int f : candidates) {
      const auto fu = static_cast<std::size_t>(f);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return X_[a][fu] < X_[b][fu]; });
      double left_sum = 0.0;
      double left_sq = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const double v = y_[order[k]];
        left_sum += v;
        left_sq += v * v;
        const std::size_t left_n = k + 1;
        const std::size_t right_n = order.size() - left_n;
        const double here = X_[order[k]][fu];
        const double next = X_[order[k + 1]][fu];
        if (!(here < next) || left_n < min_leaf || right_n < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double right_sq = total_sq - left_sq;
        const double sse = (left_sq - left_sum * left_sum / static_cast<double>(left_n)) +
                           (right_sq - right_sum * right_sum / static_cast<double>(right_n));
        if (sse < best.sse - 1e-15) {
          best.feature = f;
          best.threshold = 0.5 * (here + next);
          best.sse = sse;
          best.left_count = left_n;
        }
      }
    }
    return best;
  }

  std::span<const std::vector<double>> X_;
  std::span<const double> y_;
  const ForestOptions& options_;
  Rng& rng_;
  std::size_t dim_;
  std::vector<int> features_;
  std::size_t features_per_split_ = 1;
};

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(node)].value;
}

RandomForest RandomForest::fit(std::span<const std::vector<double>> X, std::span<const double> y,
                               const ForestOptions& options) {
  if (X.size() != y.size()) throw ContractError("forest needs as many targets as inputs");
  if (X.size() < 2) throw ContractError("forest needs at least two observations");
  if (options.num_trees < 2) throw ContractError("forest needs at least two trees");
  const std::size_t dim = X.front().size();
  for (const auto& row : X) {
    if (row.size() != dim) throw ContractError("forest inputs have inconsistent dimensions");
  }

  RandomForest forest;
  forest.dim_ = dim;
  Rng rng(mix_seed(options.seed, 0x7266));
  std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);
  TreeBuilder builder(X, y, options, rng);
  for (int t = 0; t < options.num_trees; ++t) {
    std::vector<std::size_t> idx(X.size());
    if (options.bootstrap) {
      for (auto& i : idx) i = pick(rng);
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    RegressionTree tree;
    builder.build(idx, 0, tree.nodes_);
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

Prediction RandomForest::predict(std::span<const double> x) const {
  if (x.size() != dim_) throw ContractError("forest query has the wrong dimension");
  std::vector<double> outputs;
  outputs.reserve(trees_.size());
  for (const auto& tree : trees_) outputs.push_back(tree.predict(x));
  const double n = static_cast<double>(outputs.size());
  const double mean = std::accumulate(outputs.begin(), outputs.end(), 0.0) / n;
  double spread = 0.0;
  for (double v : outputs) spread += (v - mean) * (v - mean);
  const double var = std::max(spread / n, kForestVarianceFloor);
  return {mean, var};
}

}  // namespace anchoropt
