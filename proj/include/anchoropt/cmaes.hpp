#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "anchoropt/random.hpp"
#include "anchoropt/space.hpp"

namespace anchoropt {

/// User-facing CMA-ES settings: step size, population, start point, budget.
struct CmaesParams {
  double sigma0 = 0.3;
  /// 0 selects default_lambda(n).
  int lambda = 0;
  ScaledVector mean0;
  int max_evaluations = 225;
  std::uint64_t seed = 0;
};

/// 4 + floor(3 ln n). Throws ContractError for n < 1.
int default_lambda(int n);

struct StopDecision {
  bool stop = false;
  std::string reason;  ///< "budget", "sigma-collapse", "ill-conditioned" or empty
};

/// (mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates and
/// cumulative step-size adaptation. Maximizes fitness.
///
/// Candidates are clipped into the space after sampling when a space is given;
/// the update uses the clipped points, so the mean never leaves the box.
class Cmaes {
 public:
  Cmaes(CmaesParams params, std::optional<HyperParamSpace> space = std::nullopt);

  /// Samples lambda candidates from N(mean, sigma^2 C). Throws ProtocolError
  /// if the previous batch has not been told.
  std::vector<ScaledVector> ask();

  /// Rank the outstanding batch by fitness (descending, NaN last, ties by
  /// index) and update the distribution. Returns the number of NaN fitnesses.
  std::size_t tell(std::span<const ScaledVector> candidates, std::span<const double> fitness);

  StopDecision should_stop() const;

  int dimension() const { return n_; }
  int lambda() const { return lambda_; }
  int mu() const { return mu_; }
  int generation() const { return generation_; }
  long evaluations() const { return evaluations_; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double mu_eff() const { return mu_eff_; }
  const CmaesParams& params() const { return params_; }
  bool awaiting_tell() const { return pending_.has_value(); }

  /// Largest/smallest eigenvalue ratio seen at the last decomposition, before repair.
  double condition_number() const { return condition_; }

  /// Overrides sigma; test hook for degenerate sampling and stop rules.
  void set_sigma(double sigma) { sigma_ = sigma; }

  /// Full resumable state. Requires no outstanding batch.
  nlohmann::json snapshot() const;
  /// Rebuilds an optimizer from snapshot(); params must match the snapshot's.
  static Cmaes restore(CmaesParams params, std::optional<HyperParamSpace> space,
                       const nlohmann::json& snapshot);

 private:
  void decompose();

  CmaesParams params_;
  std::optional<HyperParamSpace> space_;
  int n_ = 0;
  int lambda_ = 0;
  int mu_ = 0;

  Eigen::VectorXd weights_;
  double mu_eff_ = 0.0;
  double c_sigma_ = 0.0;
  double d_sigma_ = 0.0;
  double c_c_ = 0.0;
  double c_1_ = 0.0;
  double c_mu_ = 0.0;
  double chi_n_ = 0.0;

  Eigen::VectorXd mean_;
  double sigma_ = 0.0;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd basis_;        // eigenvectors of cov_
  Eigen::VectorXd axis_scales_;  // sqrt of eigenvalues
  Eigen::VectorXd p_sigma_;
  Eigen::VectorXd p_c_;
  int generation_ = 0;
  long evaluations_ = 0;
  double condition_ = 1.0;

  Rng rng_;
  std::optional<std::vector<ScaledVector>> pending_;
};

}  // namespace anchoropt
