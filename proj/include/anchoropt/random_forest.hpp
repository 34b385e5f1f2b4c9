#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "anchoropt/gaussian_process.hpp"

namespace anchoropt {

struct ForestOptions {
  int num_trees = 10;
  /// 0 means unlimited depth.
  int max_depth = 0;
  int min_samples_split = 3;
  int min_samples_leaf = 1;
  /// Fraction of input dimensions considered at each split (at least one).
  double feature_fraction = 5.0 / 6.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

inline constexpr double kForestVarianceFloor = 1e-12;

/// Regression tree stored as a flat node array.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  double predict(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  friend class RandomForest;
  std::vector<Node> nodes_;
};

/// Bagged CART ensemble used as the SMAC-style surrogate: the predictive mean
/// is the average of the tree outputs and the variance is their spread.
class RandomForest {
 public:
  static RandomForest fit(std::span<const std::vector<double>> X, std::span<const double> y,
                          const ForestOptions& options = {});

  Prediction predict(std::span<const double> x) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
  std::size_t dim_ = 0;
};

}  // namespace anchoropt
