#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchoropt/space.hpp"
#include "anchoropt/trial.hpp"

namespace anchoropt {

/// Append-only JSON-lines campaign log. Record types, one per line:
///   {"type":"header","version":..,"config":{..},"space":{..}}
///   {"type":"trial","trial_id":..,"generation":..,"params_scaled":[..],
///    "params_physical":{..},"fitness":num|null,"status":"ok"|"failed",
///    "detail":..,"wall_time_s":..,"timestamp":..}
///   {"type":"cmaes_state","trials":..,"state":{..}}
///   {"type":"final","best_trial_id":..,"best_fitness":..,"trials":..,"stop_reason":..}
/// Every line is flushed as soon as it is written.
class TrialLogWriter {
 public:
  /// Truncates (append = false) or appends. Throws std::runtime_error when
  /// the file cannot be opened for writing.
  TrialLogWriter(const std::string& path, bool append);
  TrialLogWriter(const TrialLogWriter&) = delete;
  TrialLogWriter& operator=(const TrialLogWriter&) = delete;
  ~TrialLogWriter();

  void write_header(const nlohmann::ordered_json& config, const HyperParamSpace& space);
  void write_trial(const Trial& trial);
  void write_cmaes_state(std::size_t trials, const nlohmann::json& state);
  void write_final(const std::optional<Trial>& best, std::size_t trials, const std::string& stop_reason);

 private:
  void write_line(const std::string& line);
  std::FILE* file_ = nullptr;
};

struct LoadedLog {
  nlohmann::ordered_json config;
  nlohmann::ordered_json space;
  std::vector<Trial> trials;
  /// Last CMA-ES snapshot and the number of trials logged before it.
  std::optional<nlohmann::json> cmaes_state;
  std::size_t trials_at_state = 0;
  std::optional<nlohmann::ordered_json> final_record;
  /// Bytes up to and including the last complete, parseable line.
  std::size_t valid_bytes = 0;
  /// True when the file ends in a partial line (an interrupted write).
  bool torn_tail = false;
};

/// Throws std::runtime_error for unreadable files, a missing header, or a
/// corrupt line anywhere other than the tail.
LoadedLog load_trial_log(const std::string& path);

nlohmann::ordered_json trial_to_json(const Trial& trial);
Trial trial_from_json(const nlohmann::ordered_json& j);

/// UTC, ISO 8601 with milliseconds.
std::string utc_timestamp();

inline constexpr const char* kLogVersion = "anchoropt-0.1.0";

}  // namespace anchoropt
