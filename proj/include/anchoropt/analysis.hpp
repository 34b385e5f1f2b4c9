#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchoropt/anchors.hpp"
#include "anchoropt/space.hpp"
#include "anchoropt/trial.hpp"

namespace anchoropt {

// ---- k-means with 1 - IoU distance -------------------------------------

struct KmeansResult {
  std::vector<Shape> centroids;
  std::vector<int> assignment;
  /// Sum over shapes of 1 - IoU to their own cluster's mean.
  double total_distance = 0.0;
  int iterations = 0;
  /// Objective after seeding and after each accepted Lloyd step.
  std::vector<double> trace;
};

/// Distance used for anchor clustering: 1 - centered IoU.
double iou_distance(const Shape& a, const Shape& b);

/// Lloyd iterations with k-means++ seeding under the IoU distance. Centroids
/// are the element-wise mean of their members. A Lloyd step that would not
/// lower the objective is replaced by a single-shape move or, for at most 64
/// shapes, a joint move of two shapes; the run stops when none helps, so the trace
/// never increases.
/// An emptied cluster takes the shape farthest from its nearest centroid.
KmeansResult kmeans_iou(std::span<const Shape> shapes, int k, std::uint64_t seed, int max_iters = 100);

/// Best of `restarts` seeded runs by total distance.
KmeansResult kmeans_iou_restarts(std::span<const Shape> shapes, int k, std::uint64_t seed,
                                 int restarts, int max_iters = 100);

// ---- linear-regression importance ---------------------------------------

struct RegressionReport {
  double r_squared = 0.0;
  /// Coefficient per dimension on min-max normalized inputs and fitness.
  std::vector<std::pair<std::string, double>> coefficients;
  double intercept = 0.0;
  std::size_t n_samples = 0;
  /// Dimension names by decreasing |coefficient|.
  std::vector<std::string> ranking;
  /// Dimensions that were constant over the trials; their coefficient is 0.
  std::vector<std::string> zero_variance;

  nlohmann::ordered_json to_json() const;
};

/// Ordinary least squares of normalized fitness on normalized scaled
/// parameters. Trials with non-finite fitness are skipped. Throws
/// ContractError with fewer than n + 2 usable trials or constant fitness.
RegressionReport fit_importance_regression(std::span<const Trial> trials,
                                           const HyperParamSpace& space);

// ---- per-generation statistics ------------------------------------------

struct GenerationStats {
  int generation = 0;
  double min_fitness = 0.0;
  double median_fitness = 0.0;
  double max_fitness = 0.0;
  /// Running max over this and earlier generations (-inf before any success).
  double best_so_far = 0.0;
  std::size_t evaluated = 0;
  std::size_t failures = 0;
};

/// Groups trials by generation (ascending). Non-finite fitness is counted as
/// a failure and left out of min/median/max, which are NaN for a generation
/// with no successes.
std::vector<GenerationStats> generation_stats(std::span<const Trial> trials);

/// CSV with header generation,min,median,max,best_so_far,failures.
void write_generation_csv(std::ostream& out, std::span<const GenerationStats> stats);

}  // namespace anchoropt
