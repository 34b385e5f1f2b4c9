#include <cmath>
#include <random>

#include "doctest.h"

#include "anchoropt/acquisition.hpp"

using namespace anchoropt;

namespace {

struct Estimate {
  double mean;
  double standard_error;
};

// E[max(Y - best - xi, 0)] for Y ~ N(mean, var), sampled.
Estimate monte_carlo_ei(double mean, double var, double best, double xi, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double s = std::sqrt(var);
  double total = 0.0;
  double total_sq = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double v = std::max(mean + s * z(rng) - best - xi, 0.0);
    total += v;
    total_sq += v * v;
  }
  const double m = total / samples;
  return {m, std::sqrt((total_sq / samples - m * m) / samples)};
}

}  // namespace

TEST_CASE("normal density and distribution") {
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-40.0) >= 0.0);
  CHECK(normal_cdf(40.0) == 1.0);
}

TEST_CASE("EI at the incumbent with unit variance is phi(0)") {
  CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
}

TEST_CASE("EI with zero variance") {
  CHECK(expected_improvement(0.5, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(1.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(1.5, 0.0, 1.0) == 0.5);
  CHECK(expected_improvement(1.5, 0.0, 1.0, 0.1) == doctest::Approx(0.4));
}

TEST_CASE("EI against Monte Carlo") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mu(-2.0, 2.0), var(0.01, 2.0), best(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double m = mu(rng), v = var(rng), b = best(rng);
    const Estimate mc = monte_carlo_ei(m, v, b, 0.0, 200000, i);
    CHECK(std::abs(expected_improvement(m, v, b) - mc.mean) <= 5.0 * mc.standard_error + 1e-12);
  }
}

TEST_CASE("EI properties") {
  // Non-negative, increasing in mean and in variance.
  double prev = 0.0;
  for (double m = -3.0; m <= 3.0; m += 0.25) {
    const double e = expected_improvement(m, 0.5, 0.0);
    CHECK(e >= prev);
    prev = e;
  }
  prev = 0.0;
  for (double v = 0.01; v <= 4.0; v += 0.1) {
    const double e = expected_improvement(0.0, v, 0.3);
    CHECK(e >= prev);
    prev = e;
  }
  CHECK(expected_improvement(-1e6, 1e-6, 0.0) == 0.0);
  CHECK(expected_improvement(0.0, 1.0, 0.0, 0.01) < expected_improvement(0.0, 1.0, 0.0, 0.0));
}
