#pragma once

#include <span>
#include <string>
#include <vector>

#include "anchoropt/space.hpp"

namespace anchoropt {

struct FitnessRequest {
  long trial_id = 0;
  int generation = 0;
  PhysicalParams params;
};

struct FitnessResponse {
  long trial_id = 0;
  double fitness = 0.0;  ///< NaN unless ok
  bool ok = false;
  std::string detail;
  /// Measured locally; not part of the wire format.
  double wall_time_s = 0.0;
};

/// {"trial_id":..,"generation":..,"params":{..}} followed by '\n'; keys in that
/// order, params in space order.
std::string encode_request(const FitnessRequest& request);
std::string encode_response(const FitnessResponse& response);

/// Parses one response line. Malformed input, a trial_id other than
/// `expected_id`, or status ok with a non-finite fitness all yield a failed
/// response whose detail says why.
FitnessResponse decode_response(const std::string& line, long expected_id);

struct EvaluatorOptions {
  /// Run through /bin/sh -c, once per request.
  std::string command;
  /// Seconds per request; <= 0 disables the limit.
  double timeout_s = 0.0;
  int max_parallel = 1;
};

/// Runs one evaluator process per request, at most max_parallel at a time.
/// Each child gets its request on stdin and must print one response line on
/// stdout and exit 0. Timeouts, nonzero exits and bad responses turn into
/// failed responses with NaN fitness. Results are in batch order.
std::vector<FitnessResponse> external_evaluate(std::span<const FitnessRequest> batch,
                                               const EvaluatorOptions& options);

}  // namespace anchoropt
