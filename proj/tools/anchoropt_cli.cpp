// anchoropt: launch, resume and inspect anchor-optimization campaigns.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 runtime failure.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anchoropt/analysis.hpp"
#include "anchoropt/anchors.hpp"
#include "anchoropt/campaign.hpp"
#include "anchoropt/errors.hpp"
#include "anchoropt/objective.hpp"

using namespace anchoropt;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

// Command-line values that override the config file when given.
struct RunFlags {
  std::string config;
  std::optional<std::string> space, optimizer, objective, annotations, evaluator, out;
  std::optional<double> sigma, xi, timeout;
  std::optional<int> lambda, budget, initial_design, acquisition_samples, max_parallel;
  std::optional<std::uint64_t> seed;
  std::vector<double> initial_vector;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--space", f.space, "builtin space (ssd, faster_rcnn) or space JSON file");
  cmd->add_option("--optimizer", f.optimizer, "cmaes, bogp or smac");
  cmd->add_option("--sigma", f.sigma, "CMA-ES initial step size");
  cmd->add_option("--lambda", f.lambda, "CMA-ES population size (0 = default)");
  cmd->add_option("--budget", f.budget, "total number of evaluations");
  cmd->add_option("--initial-vector", f.initial_vector, "CMA-ES start point, scaled units");
  cmd->add_option("--initial-design", f.initial_design, "BO initial design size (0 = default)");
  cmd->add_option("--xi", f.xi, "EI exploration margin");
  cmd->add_option("--acquisition-samples", f.acquisition_samples, "random EI candidates per step");
  cmd->add_option("--objective", f.objective, "proxy or external");
  cmd->add_option("--annotations", f.annotations, "ground-truth JSONL for the proxy objective");
  cmd->add_option("--evaluator", f.evaluator, "shell command speaking the JSON-line protocol");
  cmd->add_option("--timeout", f.timeout, "seconds per external evaluation (0 = none)");
  cmd->add_option("--max-parallel", f.max_parallel, "concurrent external evaluations");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "trial log path");
}

CampaignConfig merged_config(const RunFlags& f) {
  CampaignConfig c = f.config.empty() ? CampaignConfig{} : CampaignConfig::load(f.config);
  if (f.space) c.space = *f.space;
  if (f.optimizer) c.optimizer = *f.optimizer;
  if (f.sigma) c.sigma = *f.sigma;
  if (f.lambda) c.lambda = *f.lambda;
  if (f.budget) c.budget = *f.budget;
  if (!f.initial_vector.empty()) c.initial_vector = f.initial_vector;
  if (f.initial_design) c.initial_design_size = *f.initial_design;
  if (f.xi) c.xi = *f.xi;
  if (f.acquisition_samples) c.acquisition_samples = *f.acquisition_samples;
  if (f.objective) c.objective = *f.objective;
  if (f.annotations) c.annotations = *f.annotations;
  if (f.evaluator) c.evaluator = *f.evaluator;
  if (f.timeout) c.timeout_s = *f.timeout;
  if (f.max_parallel) c.max_parallel = *f.max_parallel;
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  return c;
}

void print_result(const CampaignResult& r) {
  nlohmann::ordered_json j;
  j["log"] = r.log_path;
  j["trials"] = r.trials;
  j["generations"] = r.generations;
  j["stop_reason"] = r.stop_reason;
  if (r.best) {
    nlohmann::ordered_json physical = nlohmann::ordered_json::object();
    for (const auto& [name, value] : r.best->params_physical.entries()) physical[name] = value;
    j["best"] = {{"trial_id", r.best->trial_id},
                 {"fitness", r.best->fitness},
                 {"params_scaled", r.best->params_scaled},
                 {"params_physical", physical}};
  } else {
    j["best"] = nullptr;
  }
  std::cout << j.dump(2) << '\n';
}

void print_anchor_row(int layer, double scale, double ratio, const Shape& s) {
  std::printf("%d,%.17g,%.17g,%.17g,%.17g\n", layer, scale, ratio, s.w, s.h);
}

void emit_anchors(const std::string& kind, const std::vector<double>& scales) {
  std::printf("layer,scale,ratio,w,h\n");
  if (kind == "ssd") {
    const SsdAnchorConfig config = scales.empty() ? ssd_default_config() : ssd_config_with_scales(scales);
    for (std::size_t l = 0; l < config.num_layers(); ++l) {
      const double s = config.scales[l];
      for (double r : config.ratios_per_layer[l]) print_anchor_row(static_cast<int>(l), s, r, anchor_wh(s, r));
      if (config.include_constant_box[l] && l + 1 < config.scales.size()) {
        const double c = constant_box_scale(s, config.scales[l + 1]);
        print_anchor_row(static_cast<int>(l), c, 1.0, {c, c});
      }
    }
    return;
  }
  FrcnnAnchorConfig config;
  if (!scales.empty()) config.scales = scales;
  // Single feature map; scales outer, ratios inner.
  for (double s : config.scales) {
    for (double r : config.ratios) print_anchor_row(0, s, r, anchor_wh(s, r));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchor hyper-parameter optimization campaigns"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "start a campaign");
  run->add_option("--config", run_flags.config, "campaign config JSON; flags override it")->check(CLI::ExistingFile);
  add_run_flags(run, run_flags);

  std::string resume_log, resume_config;
  auto* resume = app.add_subcommand("resume", "continue an interrupted campaign");
  resume->add_option("--log", resume_log, "trial log to continue")->required()->check(CLI::ExistingFile);
  resume->add_option("--config", resume_config, "refuse unless the logged config matches this one")
      ->check(CLI::ExistingFile);

  std::string report_log, report_dir;
  auto* report = app.add_subcommand("report", "summarize a trial log");
  report->add_option("--log", report_log, "trial log")->required()->check(CLI::ExistingFile);
  report->add_option("--out-dir", report_dir, "directory for summary.json, generation_stats.csv, regression.json")
      ->required();

  std::string anchor_kind;
  std::vector<double> anchor_scales;
  auto* anchors = app.add_subcommand("anchors", "print an anchor layout as CSV");
  anchors->add_option("--config", anchor_kind, "ssd or frcnn")
      ->required()
      ->check(CLI::IsMember({"ssd", "frcnn"}));
  anchors->add_option("--scales", anchor_scales, "override the scales (ssd: relative, frcnn: pixels)");

  std::string km_annotations;
  int km_k = 9;
  std::uint64_t km_seed = 0;
  int km_restarts = 5;
  auto* kmeans = app.add_subcommand("kmeans", "cluster ground-truth shapes with the IoU distance");
  kmeans->add_option("--annotations", km_annotations, "ground-truth JSONL")->required()->check(CLI::ExistingFile);
  kmeans->add_option("--k", km_k, "number of clusters")->check(CLI::PositiveNumber);
  kmeans->add_option("--seed", km_seed, "random seed");
  kmeans->add_option("--restarts", km_restarts, "seeded restarts; the best is kept")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) {
      print_result(run_campaign(merged_config(run_flags)));
    } else if (*resume) {
      std::optional<CampaignConfig> requested;
      if (!resume_config.empty()) requested = CampaignConfig::load(resume_config);
      print_result(resume_campaign(resume_log, requested));
    } else if (*report) {
      const CampaignReport r = report_campaign(report_log);
      write_report(r, report_dir);
      std::cout << r.summary_json().dump(2) << '\n';
    } else if (*anchors) {
      emit_anchors(anchor_kind, anchor_scales);
    } else if (*kmeans) {
      const AnnotationSet set = AnnotationSet::load(km_annotations);
      const auto shapes = set.normalized_shapes();
      const KmeansResult r = kmeans_iou_restarts(shapes, km_k, km_seed, km_restarts);
      std::vector<int> members(r.centroids.size(), 0);
      for (int a : r.assignment) ++members[static_cast<std::size_t>(a)];
      std::printf("cluster,w,h,members\n");
      for (std::size_t c = 0; c < r.centroids.size(); ++c) {
        std::printf("%zu,%.17g,%.17g,%d\n", c, r.centroids[c].w, r.centroids[c].h, members[c]);
      }
      std::fprintf(stderr, "mean IoU %.6f over %zu boxes\n",
                   1.0 - r.total_distance / static_cast<double>(shapes.size()), shapes.size());
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return 0;
}
