#pragma once

namespace anchoropt {

double normal_pdf(double z);
double normal_cdf(double z);

/// Expected improvement over `best` for a maximization problem under a
/// Gaussian posterior N(mean, variance). With d = mean - best - xi and
/// s = sqrt(variance): d Phi(d/s) + s phi(d/s), or max(d, 0) when s = 0.
double expected_improvement(double mean, double variance, double best, double xi = 0.0);

}  // namespace anchoropt
