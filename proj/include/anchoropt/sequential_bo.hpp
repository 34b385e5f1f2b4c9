#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "anchoropt/gaussian_process.hpp"
#include "anchoropt/random.hpp"
#include "anchoropt/random_forest.hpp"
#include "anchoropt/space.hpp"

namespace anchoropt {

enum class SurrogateKind { gp, rf };

SurrogateKind surrogate_kind_from_string(std::string_view name);

struct BoConfig {
  /// 0 selects max(10, 2 (n + 1)).
  int initial_design_size = 0;
  int budget = 75;
  int acquisition_samples = 2000;
  /// Gaussian perturbations (1% of each range) drawn around each of the ten
  /// best observed points when maximizing the acquisition.
  int local_samples_per_point = 10;
  double xi = 0.01;
  std::uint64_t seed = 0;
  int gp_restarts = 5;
  ForestOptions forest;

  /// Throws ConfigError unless 2 <= initial design < budget.
  void validate(std::size_t dimension) const;
  int resolved_initial_design(std::size_t dimension) const;
};

/// A fitted GP or random forest behind one predict() call.
class Surrogate {
 public:
  explicit Surrogate(GaussianProcess gp) : model_(std::move(gp)) {}
  explicit Surrogate(RandomForest rf) : model_(std::move(rf)) {}

  static Surrogate fit(SurrogateKind kind, std::span<const std::vector<double>> X,
                       std::span<const double> y, const BoConfig& config, std::uint64_t seed);

  Prediction predict(std::span<const double> x) const;
  SurrogateKind kind() const;

 private:
  std::variant<GaussianProcess, RandomForest> model_;
};

/// Latin hypercube over the clipped ranges of the space.
std::vector<ScaledVector> latin_hypercube(const HyperParamSpace& space, int count, Rng& rng);

/// Random multi-start EI maximization: acquisition_samples uniform points plus
/// local perturbations of the ten best observations. Ties go to the lowest
/// candidate index. Observations with NaN fitness are ignored.
ScaledVector propose_next(const Surrogate& surrogate, const HyperParamSpace& space, double best,
                          const BoConfig& config, std::span<const ScaledVector> observed_x,
                          std::span<const double> observed_y, Rng& rng);

struct BoTrial {
  ScaledVector x;
  double fitness = 0.0;  ///< NaN when the evaluation failed
};

/// Stepwise sequential model-based optimizer. next() is a pure function of the
/// configuration and the observed history, which is what makes a campaign
/// resumable by replaying its log through observe().
class SequentialBo {
 public:
  SequentialBo(HyperParamSpace space, BoConfig config, SurrogateKind kind);

  ScaledVector next() const;
  void observe(ScaledVector x, double fitness);

  bool done() const { return static_cast<int>(history_.size()) >= config_.budget; }
  const std::vector<BoTrial>& history() const { return history_; }
  /// Largest finite fitness so far, -inf if none.
  double best_fitness() const;
  const BoConfig& config() const { return config_; }
  const HyperParamSpace& space() const { return space_; }

 private:
  HyperParamSpace space_;
  BoConfig config_;
  SurrogateKind kind_;
  std::vector<ScaledVector> initial_design_;
  std::vector<BoTrial> history_;
};

struct BoResult {
  std::vector<BoTrial> history;
  std::vector<double> best_so_far;
};

/// Objective exceptions are recorded as NaN fitness and the loop continues.
BoResult run_sequential_bo(const std::function<double(const ScaledVector&)>& objective,
                           const HyperParamSpace& space, const BoConfig& config,
                           SurrogateKind kind);

}  // namespace anchoropt
