#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchoropt/analysis.hpp"
#include "anchoropt/space.hpp"
#include "anchoropt/trial.hpp"

namespace anchoropt {

/// Everything needed to launch (and later resume) one optimization campaign.
struct CampaignConfig {
  std::string space = "ssd";        ///< builtin name or path to a space JSON file
  std::string optimizer = "cmaes";  ///< cmaes | bogp | smac
  double sigma = 0.3;
  int lambda = 0;  ///< 0 = 4 + floor(3 ln n)
  std::vector<double> initial_vector;  ///< empty = the space's initial vector
  int budget = 225;
  int initial_design_size = 0;  ///< 0 = max(10, 2 (n + 1))
  double xi = 0.01;
  int acquisition_samples = 2000;
  std::string objective = "proxy";  ///< proxy | external
  std::string annotations;
  std::string evaluator;
  double timeout_s = 0.0;
  int max_parallel = 1;
  std::uint64_t seed = 0;
  std::string out = "campaign.jsonl";

  /// Checks enumerations and ranges. Throws ConfigError.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys are a ConfigError.
  static CampaignConfig from_json(const nlohmann::json& j);
  static CampaignConfig load(const std::string& path);
};

/// Lines "key: logged X, requested Y" for every setting that differs,
/// ignoring the output path.
std::vector<std::string> config_differences(const CampaignConfig& logged, const CampaignConfig& requested);

struct CampaignResult {
  std::optional<Trial> best;
  std::string log_path;
  std::size_t trials = 0;
  int generations = 0;
  std::string stop_reason;
  /// Set when resume found the campaign already finished.
  bool already_complete = false;
};

/// Starts a fresh campaign, truncating `config.out`. The output file is
/// opened before any evaluation, so an unwritable path fails fast.
/// Warnings (failed evaluations) go to `notices`.
CampaignResult run_campaign(const CampaignConfig& config, std::ostream& notices);
CampaignResult run_campaign(const CampaignConfig& config);

/// Continues a logged campaign to its budget. With `requested`, the logged
/// configuration must match it (ConfigError listing the differences
/// otherwise). A torn final line is cut off and that trial re-evaluated.
CampaignResult resume_campaign(const std::string& log_path,
                               const std::optional<CampaignConfig>& requested, std::ostream& notices);
CampaignResult resume_campaign(const std::string& log_path,
                               const std::optional<CampaignConfig>& requested = std::nullopt);

/// Highest finite fitness; ties go to the lowest trial id.
std::optional<Trial> best_trial(const std::vector<Trial>& trials);

struct CampaignReport {
  std::optional<Trial> best;
  std::vector<GenerationStats> generations;
  /// Empty when there are too few successful trials for the regression.
  std::optional<RegressionReport> regression;
  std::string regression_error;
  std::size_t trials = 0;
  std::size_t failures = 0;

  nlohmann::ordered_json summary_json() const;
};

/// Throws std::runtime_error on an empty log.
CampaignReport report_campaign(const std::string& log_path);
/// Writes summary.json, generation_stats.csv and regression.json into out_dir.
void write_report(const CampaignReport& report, const std::string& out_dir);

}  // namespace anchoropt
