#include "anchoropt/sequential_bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "anchoropt/acquisition.hpp"
#include "anchoropt/errors.hpp"

namespace anchoropt {

namespace {

constexpr int kLocalStarts = 10;
constexpr double kLocalStepFraction = 0.01;

}  // namespace

SurrogateKind surrogate_kind_from_string(std::string_view name) {
  if (name == "gp" || name == "bogp") return SurrogateKind::gp;
  if (name == "rf" || name == "smac") return SurrogateKind::rf;
  throw ConfigError("unknown surrogate '" + std::string(name) + "'");
}

int BoConfig::resolved_initial_design(std::size_t dimension) const {
  if (initial_design_size > 0) return initial_design_size;
  return std::max(10, 2 * (static_cast<int>(dimension) + 1));
}

void BoConfig::validate(std::size_t dimension) const {
  const int init = resolved_initial_design(dimension);
  if (init < 2) throw ConfigError("initial design needs at least 2 points");
  if (budget <= init) {
    throw ConfigError("budget (" + std::to_string(budget) + ") must exceed the initial design size (" +
                      std::to_string(init) + ")");
  }
  if (acquisition_samples < 1) throw ConfigError("acquisition_samples must be positive");
  if (local_samples_per_point < 0) throw ConfigError("local_samples_per_point must be >= 0");
  if (!(xi >= 0.0)) throw ConfigError("xi must be non-negative");
}

Surrogate Surrogate::fit(SurrogateKind kind, std::span<const std::vector<double>> X,
                         std::span<const double> y, const BoConfig& config, std::uint64_t seed) {
  if (kind == SurrogateKind::gp) {
    GpOptions options;
    options.restarts = config.gp_restarts;
    options.seed = seed;
    return Surrogate(GaussianProcess::fit(X, y, options));
  }
  ForestOptions options = config.forest;
  options.seed = seed;
  return Surrogate(RandomForest::fit(X, y, options));
}

Prediction Surrogate::predict(std::span<const double> x) const {
  return std::visit([&](const auto& m) { return m.predict(x); }, model_);
}

SurrogateKind Surrogate::kind() const {
  return std::holds_alternative<GaussianProcess>(model_) ? SurrogateKind::gp : SurrogateKind::rf;
}

std::vector<ScaledVector> latin_hypercube(const HyperParamSpace& space, int count, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ScaledVector> points(static_cast<std::size_t>(count), ScaledVector(space.size()));
  std::vector<int> strata(static_cast<std::size_t>(count));
  for (std::size_t d = 0; d < space.size(); ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    const double lo = space.lower_bound(d);
    const double hi = space[d].hi;
    for (int i = 0; i < count; ++i) {
      const double u = (strata[static_cast<std::size_t>(i)] + unit(rng)) / count;
      points[static_cast<std::size_t>(i)][d] = lo + u * (hi - lo);
    }
  }
  for (auto& p : points) p = space.clip(p);
  return points;
}

ScaledVector propose_next(const Surrogate& surrogate, const HyperParamSpace& space, double best,
                          const BoConfig& config, std::span<const ScaledVector> observed_x,
                          std::span<const double> observed_y, Rng& rng) {
  std::vector<ScaledVector> candidates;
  candidates.reserve(static_cast<std::size_t>(config.acquisition_samples) +
                     kLocalStarts * static_cast<std::size_t>(config.local_samples_per_point));
  for (int i = 0; i < config.acquisition_samples; ++i) candidates.push_back(space.sample_uniform(rng));

  std::vector<std::size_t> ranked;
  for (std::size_t i = 0; i < observed_y.size(); ++i) {
    if (std::isfinite(observed_y[i])) ranked.push_back(i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return observed_y[a] > observed_y[b]; });
  if (ranked.size() > kLocalStarts) ranked.resize(kLocalStarts);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i : ranked) {
    for (int k = 0; k < config.local_samples_per_point; ++k) {
      ScaledVector x = observed_x[i];
      for (std::size_t d = 0; d < x.size(); ++d) {
        x[d] += kLocalStepFraction * (space[d].hi - space[d].lo) * normal(rng);
      }
      candidates.push_back(space.clip(x));
    }
  }

  std::size_t arg = 0;
  double best_ei = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Prediction p = surrogate.predict(candidates[i]);
    const double ei = expected_improvement(p.mean, p.variance, best, config.xi);
    if (ei > best_ei) {
      best_ei = ei;
      arg = i;
    }
  }
  return candidates[arg];
}

SequentialBo::SequentialBo(HyperParamSpace space, BoConfig config, SurrogateKind kind)
    : space_(std::move(space)), config_(std::move(config)), kind_(kind) {
  config_.validate(space_.size());
  Rng rng(mix_seed(config_.seed, 1));
  initial_design_ = latin_hypercube(space_, config_.resolved_initial_design(space_.size()), rng);
}

double SequentialBo::best_fitness() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : history_) {
    if (std::isfinite(t.fitness)) best = std::max(best, t.fitness);
  }
  return best;
}

ScaledVector SequentialBo::next() const {
  const std::size_t t = history_.size();
  if (t < initial_design_.size()) return initial_design_[t];

  std::vector<ScaledVector> X;
  std::vector<double> y;
  for (const auto& trial : history_) {
    if (std::isfinite(trial.fitness)) {
      X.push_back(trial.x);
      y.push_back(trial.fitness);
    }
  }
  Rng rng(mix_seed(config_.seed, 1000 + t));
  if (X.size() < 2) return space_.sample_uniform(rng);
  const Surrogate model = Surrogate::fit(kind_, X, y, config_, mix_seed(config_.seed, 5000 + t));
  return propose_next(model, space_, best_fitness(), config_, X, y, rng);
}

void SequentialBo::observe(ScaledVector x, double fitness) {
  if (x.size() != space_.size()) throw ContractError("observation has the wrong dimension");
  history_.push_back({std::move(x), fitness});
}

BoResult run_sequential_bo(const std::function<double(const ScaledVector&)>& objective,
                           const HyperParamSpace& space, const BoConfig& config,
                           SurrogateKind kind) {
  SequentialBo bo(space, config, kind);
  BoResult result;
  double best = -std::numeric_limits<double>::infinity();
  while (!bo.done()) {
    ScaledVector x = bo.next();
    double fitness;
    try {
      fitness = objective(x);
    } catch (const std::exception&) {
      fitness = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(fitness)) best = std::max(best, fitness);
    result.best_so_far.push_back(best);
    bo.observe(std::move(x), fitness);
  }
  result.history = bo.history();
  return result;
}

}  // namespace anchoropt
