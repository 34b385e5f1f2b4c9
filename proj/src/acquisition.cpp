#include "anchoropt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace anchoropt {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mean, double variance, double best, double xi) {
  const double d = mean - best - xi;
  const double s = std::sqrt(std::max(variance, 0.0));
  if (s <= 0.0) return std::max(d, 0.0);
  const double z = d / s;
  // Rounding can push the sum a hair below zero deep in the left tail.
  return std::max(d * normal_cdf(z) + s * normal_pdf(z), 0.0);
}

}  // namespace anchoropt
