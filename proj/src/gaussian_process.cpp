#include "anchoropt/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "anchoropt/errors.hpp"
#include "anchoropt/random.hpp"

namespace anchoropt {

namespace {

const double kSqrt5 = std::sqrt(5.0);
constexpr double kMaxNoise = 1e-2;
constexpr double kFailedObjective = 1e10;

double matern52_from_r(double r, double signal_variance) {
  const double s = kSqrt5 * r;
  return signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

Eigen::MatrixXd to_matrix(std::span<const std::vector<double>> X) {
  if (X.empty()) return {};
  const auto d = static_cast<Eigen::Index>(X.front().size());
  Eigen::MatrixXd M(static_cast<Eigen::Index>(X.size()), d);
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (static_cast<Eigen::Index>(X[i].size()) != d) {
      throw ContractError("GP inputs have inconsistent dimensions");
    }
    for (Eigen::Index j = 0; j < d; ++j) M(static_cast<Eigen::Index>(i), j) = X[i][j];
  }
  return M;
}

// Log-space box for the marginal-likelihood search, reached through a
// logistic map so the optimizer itself is unconstrained.
struct LogBox {
  std::vector<double> lo;
  std::vector<double> hi;

  double to_theta(std::size_t k, double u) const {
    return lo[k] + (hi[k] - lo[k]) / (1.0 + std::exp(-u));
  }
  double dtheta_du(std::size_t k, double u) const {
    const double s = 1.0 / (1.0 + std::exp(-u));
    return (hi[k] - lo[k]) * s * (1.0 - s);
  }
  double to_u(std::size_t k, double theta) const {
    double p = (theta - lo[k]) / (hi[k] - lo[k]);
    p = std::clamp(p, 1e-6, 1.0 - 1e-6);
    return std::log(p / (1.0 - p));
  }
};

struct FitProblem {
  const Eigen::MatrixXd* X = nullptr;
  const Eigen::VectorXd* y = nullptr;
  std::vector<Eigen::MatrixXd> sq_diff;  // per dimension, (x_a - x_b)^2
  LogBox box;
  std::optional<double> fixed_noise;
  std::size_t dim = 0;

  GpHyperparameters unpack(const std::vector<double>& theta) const {
    GpHyperparameters h;
    h.lengthscales.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) h.lengthscales[i] = std::exp(theta[i]);
    h.signal_variance = std::exp(theta[dim]);
    h.noise_variance = fixed_noise ? *fixed_noise : std::exp(theta[dim + 1]);
    return h;
  }

  // Negative log marginal likelihood and its gradient with respect to theta.
  double evaluate(const std::vector<double>& theta, std::vector<double>* grad) const {
    const GpHyperparameters h = unpack(theta);
    const Eigen::Index n = X->rows();
    Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < dim; ++i) {
      r2 += sq_diff[i] / (h.lengthscales[i] * h.lengthscales[i]);
    }
    const Eigen::MatrixXd r = r2.cwiseSqrt();
    Eigen::MatrixXd kern(n, n);
    Eigen::MatrixXd shape(n, n);  // (5/3) sf2 (1 + sqrt5 r) exp(-sqrt5 r)
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double s = kSqrt5 * r(a, b);
        const double e = std::exp(-s);
        kern(a, b) = h.signal_variance * (1.0 + s + s * s / 3.0) * e;
        shape(a, b) = h.signal_variance * (5.0 / 3.0) * (1.0 + s) * e;
      }
    }
    Eigen::MatrixXd K = kern;
    K.diagonal().array() += h.noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) {
      if (grad) std::fill(grad->begin(), grad->end(), 0.0);
      return kFailedObjective;
    }
    const Eigen::VectorXd alpha = llt.solve(*y);
    const Eigen::MatrixXd L = llt.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    const double nll = 0.5 * y->dot(alpha) + 0.5 * log_det +
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad) {
      const Eigen::MatrixXd K_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
      const Eigen::MatrixXd W = alpha * alpha.transpose() - K_inv;
      for (std::size_t i = 0; i < dim; ++i) {
        const double inv_l2 = 1.0 / (h.lengthscales[i] * h.lengthscales[i]);
        (*grad)[i] = -0.5 * (W.cwiseProduct(shape.cwiseProduct(sq_diff[i]))).sum() * inv_l2;
      }
      (*grad)[dim] = -0.5 * (W.cwiseProduct(kern)).sum();
      if (!fixed_noise) (*grad)[dim + 1] = -0.5 * h.noise_variance * W.trace();
    }
    return nll;
  }
};

struct GslContext {
  const FitProblem* problem;
  std::size_t size;
};

std::vector<double> theta_from(const GslContext& ctx, const gsl_vector* u) {
  std::vector<double> theta(ctx.size);
  for (std::size_t k = 0; k < ctx.size; ++k) theta[k] = ctx.problem->box.to_theta(k, gsl_vector_get(u, k));
  return theta;
}

double gsl_f(const gsl_vector* u, void* params) {
  const auto& ctx = *static_cast<const GslContext*>(params);
  return ctx.problem->evaluate(theta_from(ctx, u), nullptr);
}

void gsl_fdf(const gsl_vector* u, void* params, double* f, gsl_vector* g) {
  const auto& ctx = *static_cast<const GslContext*>(params);
  std::vector<double> grad(ctx.size);
  *f = ctx.problem->evaluate(theta_from(ctx, u), &grad);
  for (std::size_t k = 0; k < ctx.size; ++k) {
    gsl_vector_set(g, k, grad[k] * ctx.problem->box.dtheta_du(k, gsl_vector_get(u, k)));
  }
}

void gsl_df(const gsl_vector* u, void* params, gsl_vector* g) {
  double f = 0.0;
  gsl_fdf(u, params, &f, g);
}

// One BFGS descent from u0; returns the best theta reached and its objective.
std::pair<std::vector<double>, double> descend(const FitProblem& problem,
                                               const std::vector<double>& u0) {
  GslContext ctx{&problem, u0.size()};
  gsl_multimin_function_fdf fn;
  fn.n = ctx.size;
  fn.f = &gsl_f;
  fn.df = &gsl_df;
  fn.fdf = &gsl_fdf;
  fn.params = &ctx;

  gsl_vector* start = gsl_vector_alloc(ctx.size);
  for (std::size_t k = 0; k < ctx.size; ++k) gsl_vector_set(start, k, u0[k]);
  gsl_multimin_fdfminimizer* solver =
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, ctx.size);
  gsl_multimin_fdfminimizer_set(solver, &fn, start, 0.1, 0.1);

  for (int iter = 0; iter < 200; ++iter) {
    if (gsl_multimin_fdfminimizer_iterate(solver) != GSL_SUCCESS) break;
    if (gsl_multimin_test_gradient(solver->gradient, 1e-5) == GSL_SUCCESS) break;
  }
  std::vector<double> theta = theta_from(ctx, solver->x);
  const double value = solver->f;
  gsl_multimin_fdfminimizer_free(solver);
  gsl_vector_free(start);
  return {std::move(theta), value};
}

}  // namespace

double matern52(std::span<const double> a, std::span<const double> b,
                std::span<const double> lengthscales, double signal_variance) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / lengthscales[i];
    r2 += d * d;
  }
  return matern52_from_r(std::sqrt(r2), signal_variance);
}

GaussianProcess GaussianProcess::with_hyperparameters(std::span<const std::vector<double>> X,
                                                      std::span<const double> y,
                                                      GpHyperparameters hyper) {
  if (X.size() != y.size()) throw ContractError("GP needs as many targets as inputs");
  if (X.size() < 2) throw ContractError("GP needs at least two observations");
  GaussianProcess gp;
  gp.X_ = to_matrix(X);
  if (hyper.lengthscales.size() != static_cast<std::size_t>(gp.X_.cols())) {
    throw ContractError("GP needs one lengthscale per input dimension");
  }
  Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  gp.y_offset_ = raw.mean();
  const double var = (raw.array() - gp.y_offset_).square().mean();
  gp.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  gp.y_std_ = (raw.array() - gp.y_offset_) / gp.y_scale_;
  hyper.noise_variance = std::max(hyper.noise_variance, kGpNoiseFloor);
  gp.hyper_ = std::move(hyper);
  gp.factorize();
  return gp;
}

void GaussianProcess::factorize() {
  const Eigen::Index n = X_.rows();
  Eigen::MatrixXd kern(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const double r2 = ((X_.row(a) - X_.row(b)).array() /
                         Eigen::Map<const Eigen::ArrayXd>(hyper_.lengthscales.data(), X_.cols()).transpose())
                            .square()
                            .sum();
      kern(a, b) = kern(b, a) = matern52_from_r(std::sqrt(r2), hyper_.signal_variance);
    }
  }
  // Escalate the noise by decades until the factorization succeeds.
  for (;;) {
    Eigen::MatrixXd K = kern;
    K.diagonal().array() += hyper_.noise_variance;
    chol_.compute(K);
    if (chol_.info() == Eigen::Success) break;
    if (hyper_.noise_variance >= kMaxNoise) {
      throw NumericalError("GP kernel matrix is singular even with noise variance 1e-2");
    }
    hyper_.noise_variance = std::min(hyper_.noise_variance * 10.0, kMaxNoise);
  }
  alpha_ = chol_.solve(y_std_);
  const Eigen::MatrixXd L = chol_.matrixL();
  lml_ = -0.5 * y_std_.dot(alpha_) - L.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GaussianProcess GaussianProcess::fit(std::span<const std::vector<double>> X,
                                     std::span<const double> y, const GpOptions& options) {
  if (X.size() != y.size()) throw ContractError("GP needs as many targets as inputs");
  if (X.size() < 2) throw ContractError("GP needs at least two observations");
  gsl_set_error_handler_off();

  const Eigen::MatrixXd Xm = to_matrix(X);
  const std::size_t dim = static_cast<std::size_t>(Xm.cols());
  Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  const double offset = raw.mean();
  const double var = (raw.array() - offset).square().mean();
  const double scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd ys = (raw.array() - offset) / scale;

  FitProblem problem;
  problem.X = &Xm;
  problem.y = &ys;
  problem.dim = dim;
  problem.fixed_noise = options.fixed_noise
                            ? std::optional<double>(std::max(*options.fixed_noise, kGpNoiseFloor))
                            : std::nullopt;
  const Eigen::Index n = Xm.rows();
  for (std::size_t i = 0; i < dim; ++i) {
    Eigen::MatrixXd D(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double d = Xm(a, static_cast<Eigen::Index>(i)) - Xm(b, static_cast<Eigen::Index>(i));
        D(a, b) = d * d;
      }
    }
    problem.sq_diff.push_back(std::move(D));
    const auto col = Xm.col(static_cast<Eigen::Index>(i));
    double span = col.maxCoeff() - col.minCoeff();
    if (!(span > 1e-12)) span = 1.0;
    problem.box.lo.push_back(std::log(1e-3 * span));
    problem.box.hi.push_back(std::log(1e2 * span));
  }
  problem.box.lo.push_back(std::log(1e-2));
  problem.box.hi.push_back(std::log(1e2));
  if (!problem.fixed_noise) {
    problem.box.lo.push_back(std::log(kGpNoiseFloor));
    problem.box.hi.push_back(std::log(1.0));
  }
  const std::size_t n_theta = problem.box.lo.size();

  std::vector<std::vector<double>> starts;
  {
    std::vector<double> theta0(n_theta);
    for (std::size_t i = 0; i < dim; ++i) {
      theta0[i] = 0.5 * (problem.box.lo[i] + problem.box.hi[i]) - 0.5 * std::log(10.0);
    }
    theta0[dim] = 0.0;
    if (!problem.fixed_noise) theta0[dim + 1] = std::log(1e-4);
    std::vector<double> u0(n_theta);
    for (std::size_t k = 0; k < n_theta; ++k) u0[k] = problem.box.to_u(k, theta0[k]);
    starts.push_back(std::move(u0));
  }
  Rng rng(mix_seed(options.seed, 0x6770));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < options.restarts; ++r) {
    std::vector<double> u(n_theta);
    for (std::size_t k = 0; k < n_theta; ++k) {
      const double theta = problem.box.lo[k] + unit(rng) * (problem.box.hi[k] - problem.box.lo[k]);
      u[k] = problem.box.to_u(k, theta);
    }
    starts.push_back(std::move(u));
  }

  std::vector<double> best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& u0 : starts) {
    auto [theta, value] = descend(problem, u0);
    if (value < best_value) {
      best_value = value;
      best_theta = std::move(theta);
    }
  }
  if (best_theta.empty()) throw NumericalError("GP marginal-likelihood search failed");
  return with_hyperparameters(X, y, problem.unpack(best_theta));
}

Prediction GaussianProcess::predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != X_.cols()) {
    throw ContractError("GP query has the wrong dimension");
  }
  const Eigen::Index n = X_.rows();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < X_.cols(); ++j) {
      const double d = (X_(a, j) - x[static_cast<std::size_t>(j)]) / hyper_.lengthscales[static_cast<std::size_t>(j)];
      r2 += d * d;
    }
    k_star[a] = matern52_from_r(std::sqrt(r2), hyper_.signal_variance);
  }
  const double mean_std = k_star.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k_star);
  const double var_std = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return {y_offset_ + y_scale_ * mean_std, y_scale_ * y_scale_ * var_std};
}

}  // namespace anchoropt
