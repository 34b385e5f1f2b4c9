#include "anchoropt/trial_log.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace anchoropt {

namespace {

nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

nlohmann::ordered_json trial_to_json(const Trial& trial) {
  nlohmann::ordered_json physical = nlohmann::ordered_json::object();
  for (const auto& [name, value] : trial.params_physical.entries()) physical[name] = value;
  nlohmann::ordered_json j;
  j["type"] = "trial";
  j["trial_id"] = trial.trial_id;
  j["generation"] = trial.generation;
  j["params_scaled"] = trial.params_scaled;
  j["params_physical"] = std::move(physical);
  j["fitness"] = finite_or_null(trial.fitness);
  j["status"] = trial.ok ? "ok" : "failed";
  j["detail"] = trial.detail;
  j["wall_time_s"] = trial.wall_time_s;
  j["timestamp"] = trial.timestamp;
  return j;
}

Trial trial_from_json(const nlohmann::ordered_json& j) {
  Trial t;
  t.trial_id = j.at("trial_id").get<long>();
  t.generation = j.at("generation").get<int>();
  t.params_scaled = j.at("params_scaled").get<std::vector<double>>();
  std::vector<std::pair<std::string, double>> physical;
  for (const auto& [name, value] : j.at("params_physical").items()) {
    physical.emplace_back(name, value.get<double>());
  }
  t.params_physical = PhysicalParams(std::move(physical));
  t.fitness = j.at("fitness").is_null() ? std::nan("") : j.at("fitness").get<double>();
  t.ok = j.at("status").get<std::string>() == "ok";
  t.detail = j.value("detail", "");
  t.wall_time_s = j.value("wall_time_s", 0.0);
  t.timestamp = j.value("timestamp", "");
  return t;
}

TrialLogWriter::TrialLogWriter(const std::string& path, bool append) {
  file_ = std::fopen(path.c_str(), append ? "ab" : "wb");
  if (!file_) {
    throw std::runtime_error("cannot open log '" + path + "' for writing: " + std::strerror(errno));
  }
}

TrialLogWriter::~TrialLogWriter() {
  if (file_) std::fclose(file_);
}

void TrialLogWriter::write_line(const std::string& line) {
  if (std::fputs(line.c_str(), file_) < 0 || std::fputc('\n', file_) == EOF || std::fflush(file_) != 0) {
    throw std::runtime_error("failed to write to campaign log");
  }
}

void TrialLogWriter::write_header(const nlohmann::ordered_json& config, const HyperParamSpace& space) {
  nlohmann::ordered_json j;
  j["type"] = "header";
  j["version"] = kLogVersion;
  j["config"] = config;
  j["space"] = nlohmann::ordered_json::parse(space.to_json().dump());
  write_line(j.dump());
}

void TrialLogWriter::write_trial(const Trial& trial) { write_line(trial_to_json(trial).dump()); }

void TrialLogWriter::write_cmaes_state(std::size_t trials, const nlohmann::json& state) {
  nlohmann::ordered_json j;
  j["type"] = "cmaes_state";
  j["trials"] = trials;
  j["state"] = nlohmann::ordered_json::parse(state.dump());
  write_line(j.dump());
}

void TrialLogWriter::write_final(const std::optional<Trial>& best, std::size_t trials,
                                 const std::string& stop_reason) {
  nlohmann::ordered_json j;
  j["type"] = "final";
  j["best_trial_id"] = best ? nlohmann::ordered_json(best->trial_id) : nlohmann::ordered_json(nullptr);
  j["best_fitness"] = best ? finite_or_null(best->fitness) : nlohmann::ordered_json(nullptr);
  j["trials"] = trials;
  j["stop_reason"] = stop_reason;
  write_line(j.dump());
}

LoadedLog load_trial_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  LoadedLog log;
  bool have_header = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    ++line_no;
    if (end == std::string::npos) {
      log.torn_tail = true;
      break;
    }
    const std::string line = text.substr(pos, end - pos);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      // A garbled last line is an interrupted write; anywhere else it is corruption.
      if (end + 1 >= text.size()) {
        log.torn_tail = true;
        break;
      }
      throw std::runtime_error("log '" + path + "' line " + std::to_string(line_no) + " is corrupt");
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      log.config = j.at("config");
      log.space = j.at("space");
      have_header = true;
    } else if (!have_header) {
      throw std::runtime_error("log '" + path + "' does not start with a header");
    } else if (type == "trial") {
      Trial t = trial_from_json(j);
      if (t.trial_id != static_cast<long>(log.trials.size())) {
        throw std::runtime_error("log '" + path + "' line " + std::to_string(line_no) +
                                 ": trial ids are not dense");
      }
      log.trials.push_back(std::move(t));
    } else if (type == "cmaes_state") {
      log.cmaes_state = nlohmann::json::parse(j.at("state").dump());
      log.trials_at_state = j.at("trials").get<std::size_t>();
    } else if (type == "final") {
      log.final_record = j;
    } else {
      throw std::runtime_error("log '" + path + "' line " + std::to_string(line_no) +
                               ": unknown record type '" + type + "'");
    }
    pos = end + 1;
    log.valid_bytes = pos;
  }
  if (!have_header) throw std::runtime_error("log '" + path + "' has no header");
  return log;
}

}  // namespace anchoropt
