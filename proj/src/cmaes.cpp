#include "anchoropt/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "anchoropt/errors.hpp"

namespace anchoropt {

namespace {

constexpr double kMaxCondition = 1e14;
constexpr double kMinStepLength = 1e-12;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

int default_lambda(int n) {
  if (n < 1) throw ContractError("default_lambda needs n >= 1");
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(n))));
}

Cmaes::Cmaes(CmaesParams params, std::optional<HyperParamSpace> space)
    : params_(std::move(params)), space_(std::move(space)), rng_(params_.seed) {
  if (params_.mean0.empty() && space_) params_.mean0 = space_->initial_vector();
  n_ = static_cast<int>(params_.mean0.size());
  if (n_ < 1) throw ContractError("CMA-ES needs a non-empty initial vector");
  if (space_ && space_->size() != params_.mean0.size()) {
    throw ContractError("initial vector dimension does not match the space");
  }
  if (params_.lambda == 0) params_.lambda = default_lambda(n_);
  if (!(params_.sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
  if (params_.lambda < 2) throw ConfigError("lambda must be at least 2");
  if (params_.max_evaluations < params_.lambda) {
    throw ConfigError("max_evaluations must be at least lambda");
  }

  lambda_ = params_.lambda;
  mu_ = lambda_ / 2;
  const double n = n_;

  weights_.resize(mu_);
  for (int i = 0; i < mu_; ++i) {
    weights_[i] = std::log((lambda_ + 1) / 2.0) - std::log(i + 1.0);
  }
  weights_ /= weights_.sum();
  mu_eff_ = 1.0 / weights_.squaredNorm();

  c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) + c_sigma_;
  c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
  c_1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_,
                   2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((n + 2.0) * (n + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  mean_ = to_eigen(space_ ? space_->clip(params_.mean0) : params_.mean0);
  sigma_ = params_.sigma0;
  cov_ = Eigen::MatrixXd::Identity(n_, n_);
  p_sigma_ = Eigen::VectorXd::Zero(n_);
  p_c_ = Eigen::VectorXd::Zero(n_);
  decompose();
}

void Cmaes::decompose() {
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  Eigen::VectorXd values = eig.eigenvalues();
  const double max_ev = values.maxCoeff();
  const double min_ev = values.minCoeff();
  condition_ = min_ev > 0.0 ? max_ev / min_ev : std::numeric_limits<double>::infinity();
  if (condition_ > kMaxCondition) {
    // Lift the spectrum so the condition number is exactly the cap.
    const double shift = max_ev / kMaxCondition - min_ev;
    cov_.diagonal().array() += shift;
    values.array() += shift;
  }
  basis_ = eig.eigenvectors();
  axis_scales_ = values.cwiseMax(0.0).cwiseSqrt();
}

std::vector<ScaledVector> Cmaes::ask() {
  if (pending_) throw ProtocolError("ask() called again before tell()");
  decompose();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ScaledVector> batch;
  batch.reserve(lambda_);
  Eigen::VectorXd z(n_);
  for (int k = 0; k < lambda_; ++k) {
    for (int i = 0; i < n_; ++i) z[i] = normal(rng_);
    const Eigen::VectorXd x = mean_ + sigma_ * (basis_ * axis_scales_.cwiseProduct(z));
    std::vector<double> candidate = to_std(x);
    batch.push_back(space_ ? space_->clip(candidate) : std::move(candidate));
  }
  pending_ = batch;
  return batch;
}

std::size_t Cmaes::tell(std::span<const ScaledVector> candidates, std::span<const double> fitness) {
  if (!pending_) throw ProtocolError("tell() without an outstanding ask()");
  if (candidates.size() != static_cast<std::size_t>(lambda_) || fitness.size() != candidates.size()) {
    throw ProtocolError("tell() expects exactly lambda candidates and fitness values");
  }
  if (!std::equal(candidates.begin(), candidates.end(), pending_->begin())) {
    throw ProtocolError("tell() candidates differ from the last ask() batch");
  }

  std::size_t nan_count = 0;
  for (double f : fitness) nan_count += std::isnan(f) ? 1 : 0;

  std::vector<int> order(lambda_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool a_nan = std::isnan(fitness[a]);
    const bool b_nan = std::isnan(fitness[b]);
    if (a_nan != b_nan) return b_nan;
    if (a_nan) return false;
    return fitness[a] > fitness[b];
  });

  const Eigen::VectorXd old_mean = mean_;
  Eigen::MatrixXd steps(n_, mu_);
  for (int i = 0; i < mu_; ++i) {
    steps.col(i) = (to_eigen(candidates[order[i]]) - old_mean) / sigma_;
  }
  const Eigen::VectorXd step_w = steps * weights_;
  mean_ = old_mean + sigma_ * step_w;

  // C^{-1/2} step_w through the cached eigenbasis.
  Eigen::VectorXd inv_sqrt_step = basis_.transpose() * step_w;
  for (int i = 0; i < n_; ++i) {
    inv_sqrt_step[i] = axis_scales_[i] > 0.0 ? inv_sqrt_step[i] / axis_scales_[i] : 0.0;
  }
  inv_sqrt_step = basis_ * inv_sqrt_step;

  p_sigma_ = (1.0 - c_sigma_) * p_sigma_ +
             std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * inv_sqrt_step;
  const double ps_norm = p_sigma_.norm();
  const double decay = 1.0 - std::pow(1.0 - c_sigma_, 2.0 * (generation_ + 1));
  const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (n_ + 1.0)) * chi_n_;

  p_c_ = (1.0 - c_c_) * p_c_;
  if (h_sigma) p_c_ += std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * step_w;

  const double delta_h = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
  Eigen::MatrixXd rank_mu = steps * weights_.asDiagonal() * steps.transpose();
  cov_ = (1.0 + c_1_ * delta_h - c_1_ - c_mu_) * cov_ + c_1_ * (p_c_ * p_c_.transpose()) +
         c_mu_ * rank_mu;
  cov_ = 0.5 * (cov_ + cov_.transpose());

  sigma_ *= std::exp((c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));

  ++generation_;
  evaluations_ += lambda_;
  pending_.reset();
  return nan_count;
}

StopDecision Cmaes::should_stop() const {
  if (evaluations_ >= params_.max_evaluations) return {true, "budget"};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (sigma_ * std::sqrt(std::max(max_ev, 0.0)) < kMinStepLength) return {true, "sigma-collapse"};
  const double live_condition =
      min_ev > 0.0 ? max_ev / min_ev : std::numeric_limits<double>::infinity();
  if (live_condition > kMaxCondition || condition_ > kMaxCondition) {
    return {true, "ill-conditioned"};
  }
  return {};
}

nlohmann::json Cmaes::snapshot() const {
  if (pending_) throw ProtocolError("cannot snapshot CMA-ES with an outstanding batch");
  std::ostringstream rng_state;
  rng_state << rng_;
  std::vector<double> cov_flat(cov_.data(), cov_.data() + cov_.size());
  return {{"mean", to_std(mean_)},
          {"sigma", sigma_},
          {"covariance", cov_flat},
          {"p_sigma", to_std(p_sigma_)},
          {"p_c", to_std(p_c_)},
          {"generation", generation_},
          {"evaluations", evaluations_},
          {"seed", params_.seed},
          {"lambda", lambda_},
          {"rng", rng_state.str()}};
}

Cmaes Cmaes::restore(CmaesParams params, std::optional<HyperParamSpace> space,
                     const nlohmann::json& snap) {
  Cmaes es(std::move(params), std::move(space));
  if (snap.at("lambda").get<int>() != es.lambda_ ||
      snap.at("seed").get<std::uint64_t>() != es.params_.seed) {
    throw ConfigError("CMA-ES snapshot does not match the configured lambda/seed");
  }
  const auto mean = snap.at("mean").get<std::vector<double>>();
  const auto cov = snap.at("covariance").get<std::vector<double>>();
  if (static_cast<int>(mean.size()) != es.n_ || static_cast<int>(cov.size()) != es.n_ * es.n_) {
    throw ConfigError("CMA-ES snapshot has the wrong dimension");
  }
  es.mean_ = to_eigen(mean);
  es.sigma_ = snap.at("sigma").get<double>();
  es.cov_ = Eigen::Map<const Eigen::MatrixXd>(cov.data(), es.n_, es.n_);
  es.p_sigma_ = to_eigen(snap.at("p_sigma").get<std::vector<double>>());
  es.p_c_ = to_eigen(snap.at("p_c").get<std::vector<double>>());
  es.generation_ = snap.at("generation").get<int>();
  es.evaluations_ = snap.at("evaluations").get<long>();
  std::istringstream rng_state(snap.at("rng").get<std::string>());
  rng_state >> es.rng_;
  return es;
}

}  // namespace anchoropt
