#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "anchoropt/analysis.hpp"
#include "anchoropt/errors.hpp"

namespace anchoropt {

namespace {

// Min-max scale to [0, 1]; returns false for a constant column.
bool normalize(Eigen::Ref<Eigen::VectorXd> column) {
  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  if (!(hi > lo)) {
    column.setZero();
    return false;
  }
  column = (column.array() - lo) / (hi - lo);
  return true;
}

}  // namespace

nlohmann::ordered_json RegressionReport::to_json() const {
  nlohmann::ordered_json coeffs = nlohmann::ordered_json::object();
  for (const auto& [name, value] : coefficients) coeffs[name] = value;
  nlohmann::ordered_json importance = nlohmann::ordered_json::array();
  for (const auto& name : ranking) {
    for (const auto& [key, value] : coefficients) {
      if (key == name) importance.push_back({{"name", name}, {"abs_coefficient", std::abs(value)}});
    }
  }
  nlohmann::ordered_json j;
  j["r_squared"] = r_squared;
  j["intercept"] = intercept;
  j["n_samples"] = n_samples;
  j["coefficients"] = std::move(coeffs);
  j["importance"] = std::move(importance);
  j["zero_variance"] = zero_variance;
  return j;
}

RegressionReport fit_importance_regression(std::span<const Trial> trials,
                                           const HyperParamSpace& space) {
  const std::size_t n = space.size();
  std::vector<const Trial*> usable;
  for (const auto& t : trials) {
    if (!std::isfinite(t.fitness)) continue;
    if (t.params_scaled.size() != n) throw ContractError("trial dimension does not match the space");
    usable.push_back(&t);
  }
  // Canonical row order, so a permuted history gives bit-identical results.
  std::stable_sort(usable.begin(), usable.end(), [](const Trial* a, const Trial* b) {
    if (a->trial_id != b->trial_id) return a->trial_id < b->trial_id;
    if (a->params_scaled != b->params_scaled) return a->params_scaled < b->params_scaled;
    return a->fitness < b->fitness;
  });
  if (usable.size() < n + 2) {
    throw ContractError("importance regression needs at least " + std::to_string(n + 2) +
                        " finite trials, got " + std::to_string(usable.size()));
  }

  const auto rows = static_cast<Eigen::Index>(usable.size());
  Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(n));
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Trial& t = *usable[static_cast<std::size_t>(r)];
    for (std::size_t d = 0; d < n; ++d) X(r, static_cast<Eigen::Index>(d)) = t.params_scaled[d];
    y[r] = t.fitness;
  }
  if (!normalize(y)) throw ContractError("importance regression needs non-constant fitness");

  RegressionReport report;
  report.n_samples = usable.size();
  std::vector<std::size_t> active;
  for (std::size_t d = 0; d < n; ++d) {
    if (normalize(X.col(static_cast<Eigen::Index>(d)))) {
      active.push_back(d);
    } else {
      report.zero_variance.push_back(space[d].name);
    }
  }

  Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(active.size()) + 1);
  design.col(0).setOnes();
  for (std::size_t a = 0; a < active.size(); ++a) {
    design.col(static_cast<Eigen::Index>(a) + 1) = X.col(static_cast<Eigen::Index>(active[a]));
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);

  std::vector<double> coef(n, 0.0);
  for (std::size_t a = 0; a < active.size(); ++a) coef[active[a]] = beta[static_cast<Eigen::Index>(a) + 1];
  report.intercept = beta[0];
  for (std::size_t d = 0; d < n; ++d) report.coefficients.emplace_back(space[d].name, coef[d]);

  const Eigen::VectorXd residual = y - design * beta;
  const double ss_tot = (y.array() - y.mean()).square().sum();
  report.r_squared = 1.0 - residual.squaredNorm() / ss_tot;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(coef[a]) > std::abs(coef[b]); });
  for (auto d : order) report.ranking.push_back(space[d].name);
  return report;
}

}  // namespace anchoropt
