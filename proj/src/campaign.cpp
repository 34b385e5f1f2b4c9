#include "anchoropt/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "anchoropt/cmaes.hpp"
#include "anchoropt/errors.hpp"
#include "anchoropt/external_evaluator.hpp"
#include "anchoropt/objective.hpp"
#include "anchoropt/sequential_bo.hpp"
#include "anchoropt/trial_log.hpp"

namespace anchoropt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

HyperParamSpace resolve_space(const std::string& name_or_path) {
  if (HyperParamSpace::is_builtin_name(name_or_path)) return HyperParamSpace::builtin(name_or_path);
  return HyperParamSpace::load(name_or_path);
}

// Fitness source for a campaign: the in-process proxy or external evaluators.
class CampaignObjective {
 public:
  CampaignObjective(const CampaignConfig& config, const HyperParamSpace& space) : space_(space) {
    if (config.objective == "proxy") {
      proxy_.emplace(space, AnnotationSet::load(config.annotations));
    } else {
      external_ = EvaluatorOptions{config.evaluator, config.timeout_s, config.max_parallel};
    }
  }

  std::vector<FitnessResponse> evaluate(const std::vector<FitnessRequest>& requests,
                                        const std::vector<ScaledVector>& points) const {
    if (external_) return external_evaluate(requests, *external_);
    std::vector<FitnessResponse> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto start = std::chrono::steady_clock::now();
      FitnessResponse r{requests[i].trial_id, kNaN, false, "", 0.0};
      try {
        r.fitness = (*proxy_)(points[i]);
        r.ok = std::isfinite(r.fitness);
        if (!r.ok) r.detail = "proxy objective returned a non-finite value";
      } catch (const std::exception& e) {
        r.fitness = kNaN;
        r.detail = e.what();
      }
      r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  const HyperParamSpace& space_;
  std::optional<ProxyObjective> proxy_;
  std::optional<EvaluatorOptions> external_;
};

class Driver {
 public:
  Driver(CampaignConfig config, HyperParamSpace space, TrialLogWriter& writer, std::vector<Trial> trials,
         std::ostream& notices)
      : config_(std::move(config)),
        space_(std::move(space)),
        objective_(config_, space_),
        writer_(writer),
        trials_(std::move(trials)),
        notices_(notices) {}

  CampaignResult run(const std::optional<nlohmann::json>& state, std::size_t trials_at_state) {
    const std::string reason = config_.optimizer == "cmaes" ? run_cmaes(state, trials_at_state) : run_bo();
    CampaignResult result;
    result.best = best_trial(trials_);
    result.log_path = config_.out;
    result.trials = trials_.size();
    for (const auto& t : trials_) result.generations = std::max(result.generations, t.generation + 1);
    result.stop_reason = reason;
    writer_.write_final(result.best, trials_.size(), reason);
    return result;
  }

 private:
  // Evaluates points as trials first_id, first_id + 1, ... and logs each.
  void evaluate_and_log(const std::vector<ScaledVector>& points, const std::vector<int>& generations) {
    std::vector<FitnessRequest> requests;
    for (std::size_t i = 0; i < points.size(); ++i) {
      requests.push_back({static_cast<long>(trials_.size() + i), generations[i], space_.transform(points[i])});
    }
    const auto responses = objective_.evaluate(requests, points);
    for (std::size_t i = 0; i < points.size(); ++i) {
      Trial t;
      t.trial_id = requests[i].trial_id;
      t.generation = requests[i].generation;
      t.params_scaled = points[i];
      t.params_physical = requests[i].params;
      t.ok = responses[i].ok;
      t.fitness = t.ok ? responses[i].fitness : kNaN;
      t.detail = responses[i].detail;
      t.wall_time_s = responses[i].wall_time_s;
      t.timestamp = utc_timestamp();
      if (!t.ok) notices_ << "warning: trial " << t.trial_id << " failed: " << t.detail << '\n';
      writer_.write_trial(t);
      trials_.push_back(std::move(t));
    }
  }

  std::string run_cmaes(const std::optional<nlohmann::json>& state, std::size_t trials_at_state) {
    CmaesParams params;
    params.sigma0 = config_.sigma;
    params.lambda = config_.lambda;
    params.mean0 = config_.initial_vector.empty() ? space_.initial_vector() : config_.initial_vector;
    params.max_evaluations = config_.budget;
    params.seed = config_.seed;
    Cmaes es = state ? Cmaes::restore(params, space_, *state) : Cmaes(params, space_);
    if (static_cast<long>(trials_at_state) != es.evaluations()) {
      throw std::runtime_error("log is inconsistent: state snapshot does not match the trial count");
    }
    std::size_t replay = trials_.size() - trials_at_state;
    if (replay > static_cast<std::size_t>(es.lambda())) {
      throw std::runtime_error("log is inconsistent: more trials than one generation after the last snapshot");
    }
    const auto budget = static_cast<std::size_t>(config_.budget);

    for (;;) {
      if (trials_.size() >= budget) return "budget";
      const StopDecision stop = es.should_stop();
      if (stop.stop) return stop.reason;

      const auto batch = es.ask();
      const std::size_t base = trials_.size() - replay;
      const std::size_t take = std::min(batch.size(), budget - base);
      for (std::size_t i = 0; i < replay; ++i) {
        if (trials_[base + i].params_scaled != batch[i]) {
          throw std::runtime_error("log diverges from the replayed CMA-ES candidates at trial " +
                                   std::to_string(base + i));
        }
      }
      const std::vector<ScaledVector> fresh(batch.begin() + static_cast<long>(replay),
                                            batch.begin() + static_cast<long>(take));
      evaluate_and_log(fresh, std::vector<int>(fresh.size(), es.generation()));
      replay = 0;
      if (take < batch.size()) return "budget";

      std::vector<double> fitness;
      for (std::size_t i = 0; i < batch.size(); ++i) fitness.push_back(trials_[base + i].fitness);
      const std::size_t failed = es.tell(batch, fitness);
      if (failed > 0) {
        notices_ << "warning: generation " << es.generation() - 1 << " had " << failed
                 << " failed evaluation(s), ranked last\n";
      }
      writer_.write_cmaes_state(trials_.size(), es.snapshot());
    }
  }

  std::string run_bo() {
    BoConfig bo_config;
    bo_config.initial_design_size = config_.initial_design_size;
    bo_config.budget = config_.budget;
    bo_config.acquisition_samples = config_.acquisition_samples;
    bo_config.xi = config_.xi;
    bo_config.seed = config_.seed;
    SequentialBo bo(space_, bo_config, surrogate_kind_from_string(config_.optimizer));
    for (const auto& t : trials_) bo.observe(t.params_scaled, t.fitness);
    while (!bo.done()) {
      const ScaledVector x = bo.next();
      evaluate_and_log({x}, {static_cast<int>(trials_.size())});
      bo.observe(x, trials_.back().fitness);
    }
    return "budget";
  }

  CampaignConfig config_;
  HyperParamSpace space_;
  CampaignObjective objective_;
  TrialLogWriter& writer_;
  std::vector<Trial> trials_;
  std::ostream& notices_;
};

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void CampaignConfig::validate() const {
  if (space.empty()) throw ConfigError("no space configured");
  if (optimizer != "cmaes" && optimizer != "bogp" && optimizer != "smac") {
    throw ConfigError("unknown optimizer '" + optimizer + "' (expected cmaes, bogp or smac)");
  }
  if (objective != "proxy" && objective != "external") {
    throw ConfigError("unknown objective '" + objective + "' (expected proxy or external)");
  }
  if (budget <= 0) throw ConfigError("budget must be positive");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (lambda != 0 && lambda < 2) throw ConfigError("lambda must be at least 2");
  if (max_parallel < 1) throw ConfigError("max_parallel must be at least 1");
  if (objective == "proxy" && annotations.empty()) throw ConfigError("the proxy objective needs --annotations");
  if (objective == "external" && evaluator.empty()) throw ConfigError("the external objective needs --evaluator");
  if (objective == "proxy" && !std::filesystem::exists(annotations)) {
    throw ConfigError("annotations file '" + annotations + "' does not exist");
  }
  if (!HyperParamSpace::is_builtin_name(space) && !std::filesystem::exists(space)) {
    throw ConfigError("space '" + space + "' is neither a builtin name nor an existing file");
  }
}

nlohmann::ordered_json CampaignConfig::to_json() const {
  nlohmann::ordered_json j;
  j["space"] = space;
  j["optimizer"] = optimizer;
  j["sigma"] = sigma;
  j["lambda"] = lambda;
  j["initial_vector"] = initial_vector;
  j["budget"] = budget;
  j["initial_design_size"] = initial_design_size;
  j["xi"] = xi;
  j["acquisition_samples"] = acquisition_samples;
  j["objective"] = objective;
  j["annotations"] = annotations;
  j["evaluator"] = evaluator;
  j["timeout_s"] = timeout_s;
  j["max_parallel"] = max_parallel;
  j["seed"] = seed;
  j["out"] = out;
  return j;
}

CampaignConfig CampaignConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("campaign config must be a JSON object");
  static const std::set<std::string> known{
      "space", "optimizer", "sigma", "lambda", "initial_vector", "budget", "initial_design_size", "xi",
      "acquisition_samples", "objective", "annotations", "evaluator", "timeout_s", "max_parallel", "seed",
      "out"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown campaign config key '" + key + "'");
  }
  CampaignConfig c;
  try {
    read_key(j, "space", c.space);
    read_key(j, "optimizer", c.optimizer);
    read_key(j, "sigma", c.sigma);
    read_key(j, "lambda", c.lambda);
    read_key(j, "initial_vector", c.initial_vector);
    read_key(j, "budget", c.budget);
    read_key(j, "initial_design_size", c.initial_design_size);
    read_key(j, "xi", c.xi);
    read_key(j, "acquisition_samples", c.acquisition_samples);
    read_key(j, "objective", c.objective);
    read_key(j, "annotations", c.annotations);
    read_key(j, "evaluator", c.evaluator);
    read_key(j, "timeout_s", c.timeout_s);
    read_key(j, "max_parallel", c.max_parallel);
    read_key(j, "seed", c.seed);
    read_key(j, "out", c.out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed campaign config: ") + e.what());
  }
  return c;
}

CampaignConfig CampaignConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::string> config_differences(const CampaignConfig& logged, const CampaignConfig& requested) {
  const auto a = logged.to_json();
  const auto b = requested.to_json();
  std::vector<std::string> diffs;
  for (const auto& [key, value] : a.items()) {
    if (key == "out") continue;
    if (value != b.at(key)) diffs.push_back(key + ": logged " + value.dump() + ", requested " + b.at(key).dump());
  }
  return diffs;
}

std::optional<Trial> best_trial(const std::vector<Trial>& trials) {
  std::optional<Trial> best;
  for (const auto& t : trials) {
    if (!std::isfinite(t.fitness)) continue;
    if (!best || t.fitness > best->fitness) best = t;
  }
  return best;
}

CampaignResult run_campaign(const CampaignConfig& config, std::ostream& notices) {
  config.validate();
  HyperParamSpace space = resolve_space(config.space);
  if (!config.initial_vector.empty() && config.initial_vector.size() != space.size()) {
    throw ConfigError("initial_vector has " + std::to_string(config.initial_vector.size()) +
                      " entries, space has " + std::to_string(space.size()));
  }
  TrialLogWriter writer(config.out, false);
  writer.write_header(config.to_json(), space);
  Driver driver(config, std::move(space), writer, {}, notices);
  return driver.run(std::nullopt, 0);
}

CampaignResult run_campaign(const CampaignConfig& config) { return run_campaign(config, std::cerr); }

CampaignResult resume_campaign(const std::string& log_path, const std::optional<CampaignConfig>& requested,
                               std::ostream& notices) {
  LoadedLog log = load_trial_log(log_path);
  CampaignConfig config = CampaignConfig::from_json(nlohmann::json::parse(log.config.dump()));
  if (requested) {
    const auto diffs = config_differences(config, *requested);
    if (!diffs.empty()) {
      std::string msg = "configuration does not match the logged campaign:";
      for (const auto& d : diffs) msg += "\n  " + d;
      throw ConfigError(msg);
    }
  }
  config.out = log_path;

  if (log.final_record) {
    notices << "notice: campaign in '" << log_path << "' is already complete\n";
    CampaignResult result;
    result.best = best_trial(log.trials);
    result.log_path = log_path;
    result.trials = log.trials.size();
    for (const auto& t : log.trials) result.generations = std::max(result.generations, t.generation + 1);
    result.stop_reason = log.final_record->value("stop_reason", "");
    result.already_complete = true;
    return result;
  }

  if (log.torn_tail) {
    notices << "notice: dropping a partially written line at the end of '" << log_path << "'\n";
    std::filesystem::resize_file(log_path, log.valid_bytes);
  }
  HyperParamSpace space = HyperParamSpace::from_json(nlohmann::json::parse(log.space.dump()));
  // The snapshot may precede trials of an unfinished generation; those are replayed.
  std::optional<nlohmann::json> state = log.cmaes_state;
  const std::size_t trials_at_state = state ? log.trials_at_state : 0;
  TrialLogWriter writer(log_path, true);
  Driver driver(config, std::move(space), writer, std::move(log.trials), notices);
  return driver.run(state, trials_at_state);
}

CampaignResult resume_campaign(const std::string& log_path, const std::optional<CampaignConfig>& requested) {
  return resume_campaign(log_path, requested, std::cerr);
}

nlohmann::ordered_json CampaignReport::summary_json() const {
  nlohmann::ordered_json j;
  j["trials"] = trials;
  j["failures"] = failures;
  j["generations"] = generations.size();
  if (best) {
    nlohmann::ordered_json physical = nlohmann::ordered_json::object();
    for (const auto& [name, value] : best->params_physical.entries()) physical[name] = value;
    j["best"] = {{"trial_id", best->trial_id},
                 {"generation", best->generation},
                 {"fitness", best->fitness},
                 {"params_scaled", best->params_scaled},
                 {"params_physical", physical}};
  } else {
    j["best"] = nullptr;
  }
  return j;
}

CampaignReport report_campaign(const std::string& log_path) {
  const LoadedLog log = load_trial_log(log_path);
  if (log.trials.empty()) throw std::runtime_error("log '" + log_path + "' contains no trials");
  const HyperParamSpace space = HyperParamSpace::from_json(nlohmann::json::parse(log.space.dump()));
  CampaignReport report;
  report.trials = log.trials.size();
  for (const auto& t : log.trials) report.failures += std::isfinite(t.fitness) ? 0 : 1;
  report.best = best_trial(log.trials);
  report.generations = generation_stats(log.trials);
  try {
    report.regression = fit_importance_regression(log.trials, space);
  } catch (const ContractError& e) {
    report.regression_error = e.what();
  }
  return report;
}

void write_report(const CampaignReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  {
    std::ofstream out(dir / "summary.json");
    out << report.summary_json().dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "generation_stats.csv");
    write_generation_csv(out, report.generations);
  }
  {
    std::ofstream out(dir / "regression.json");
    if (report.regression) {
      out << report.regression->to_json().dump(2) << '\n';
    } else {
      out << nlohmann::ordered_json{{"error", report.regression_error}}.dump(2) << '\n';
    }
  }
}

}  // namespace anchoropt
