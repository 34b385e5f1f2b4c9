#pragma once

#include <string>

#include "anchoropt/space.hpp"

namespace anchoropt {

/// One evaluated candidate.
struct Trial {
  long trial_id = 0;
  int generation = 0;
  ScaledVector params_scaled;
  PhysicalParams params_physical;
  double fitness = 0.0;  ///< NaN for failed evaluations
  bool ok = true;
  std::string detail;
  double wall_time_s = 0.0;
  std::string timestamp;
};

}  // namespace anchoropt
