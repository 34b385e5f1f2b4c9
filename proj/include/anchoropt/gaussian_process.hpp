#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace anchoropt {

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Matern-5/2 ARD kernel parameters. Variances refer to the standardized
/// targets; GaussianProcess rescales predictions back to raw units.
struct GpHyperparameters {
  std::vector<double> lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

struct GpOptions {
  /// Random restarts of the marginal-likelihood search, on top of one
  /// deterministic start.
  int restarts = 5;
  std::uint64_t seed = 0;
  /// When set, the noise variance is held at this value instead of fitted.
  std::optional<double> fixed_noise;
};

inline constexpr double kGpNoiseFloor = 1e-8;

/// Exact GP regression posterior. Immutable after construction, so
/// concurrent predict() calls are safe.
class GaussianProcess {
 public:
  /// Standardizes y, maximizes the log marginal likelihood over lengthscales,
  /// signal and noise variance, then factorizes. Needs |X| = |y| >= 2.
  static GaussianProcess fit(std::span<const std::vector<double>> X, std::span<const double> y,
                             const GpOptions& options = {});

  /// Same posterior with kernel parameters given instead of fitted.
  static GaussianProcess with_hyperparameters(std::span<const std::vector<double>> X,
                                              std::span<const double> y,
                                              GpHyperparameters hyper);

  Prediction predict(std::span<const double> x) const;

  /// Latent variance far away from all data, in raw units.
  double prior_variance() const { return y_scale_ * y_scale_ * hyper_.signal_variance; }
  const GpHyperparameters& hyperparameters() const { return hyper_; }
  /// Log marginal likelihood of the standardized targets.
  double log_marginal_likelihood() const { return lml_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  double y_offset() const { return y_offset_; }
  double y_scale() const { return y_scale_; }

 private:
  GaussianProcess() = default;
  void factorize();

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_std_;
  double y_offset_ = 0.0;
  double y_scale_ = 1.0;
  GpHyperparameters hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

/// Matern-5/2 covariance between two points.
double matern52(std::span<const double> a, std::span<const double> b,
                std::span<const double> lengthscales, double signal_variance);

}  // namespace anchoropt
