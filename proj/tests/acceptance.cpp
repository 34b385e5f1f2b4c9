// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <gsl/gsl_cdf.h>

#include "anchoropt/acquisition.hpp"
#include "anchoropt/analysis.hpp"
#include "anchoropt/anchors.hpp"
#include "anchoropt/campaign.hpp"
#include "anchoropt/errors.hpp"
#include "anchoropt/cmaes.hpp"
#include "anchoropt/gaussian_process.hpp"
#include "anchoropt/objective.hpp"
#include "anchoropt/sequential_bo.hpp"
#include "anchoropt/trial_log.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace anchoropt;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename F>
void criterion(const char* name, F body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail += std::string(" exception: ") + e.what();
  }
  report(name, ok, detail);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double neg_sphere(const ScaledVector& x) {
  double s = 0.0;
  for (double v : x) s += (v - 0.5) * (v - 0.5);
  return -s;
}

ScaledVector uniform_start(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScaledVector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<std::string> comparable_log(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::ordered_json::parse(line);
    if (j["type"] == "trial") {
      j.erase("timestamp");
      j.erase("wall_time_s");
    }
    if (j["type"] == "header") j["config"].erase("out");
    out.push_back(j.dump());
  }
  return out;
}

}  // namespace

int main() {
  criterion("space constants", [](std::string& d) {
    const auto space = HyperParamSpace::builtin("faster_rcnn");
    const std::vector<double> v{0.6, 0.25, 0.5, 1, 0.25, 0.5, 1};
    const auto p = space.transform(v);
    const double want[] = {600, 0.5, 1, 2, 128, 256, 512};
    bool ok = p.size() == 7;
    for (std::size_t i = 0; ok && i < 7; ++i) ok = p.entries()[i].second == want[i];
    d = "transform(initial) = {600, 0.5, 1, 2, 128, 256, 512} exact";
    return ok;
  });

  criterion("lambda formula", [](std::string& d) {
    d = "default_lambda(7) = " + std::to_string(default_lambda(7));
    return default_lambda(7) == 9;
  });

  criterion("ssd defaults", [](std::string& d) {
    const std::vector<double> want{0.1, 0.2, 0.37, 0.54, 0.71, 0.88, 1.05};
    const bool defaults = ssd_default_config().scales == want;
    const auto s = ssd_scale_schedule(0.2, 0.9, 6);
    const double expected[] = {0.2, 0.34, 0.48, 0.62, 0.76, 0.9};
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(s[i] - expected[i]));
    d = std::string("default scales ") + (defaults ? "exact" : "differ") + fmt("; schedule max error %.3g", worst);
    return defaults && worst <= 1e-12;
  });

  criterion("cmaes sphere and rank invariance", [](std::string& d) {
    const auto start = std::chrono::steady_clock::now();
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Cmaes es({0.3, 9, uniform_start(7, seed), 9 * 200, seed});
      double best = -1e300;
      for (int g = 0; g < 200 && !es.should_stop().stop; ++g) {
        const auto batch = es.ask();
        std::vector<double> f;
        for (const auto& x : batch) {
          f.push_back(neg_sphere(x));
          best = std::max(best, f.back());
        }
        es.tell(batch, f);
      }
      solved += best > -1e-8 ? 1 : 0;
    }
    const double elapsed = seconds_since(start);

    Cmaes a({0.3, 9, uniform_start(7, 99), 9 * 100, 5});
    Cmaes b({0.3, 9, uniform_start(7, 99), 9 * 100, 5});
    bool identical = true;
    for (int g = 0; g < 100 && identical; ++g) {
      const auto xa = a.ask();
      const auto xb = b.ask();
      identical = xa == xb;
      std::vector<double> fa, fb;
      for (const auto& x : xa) {
        fa.push_back(neg_sphere(x));
        fb.push_back(std::atan(neg_sphere(x)) * 1e3 + 42.0);
      }
      a.tell(xa, fa);
      b.tell(xb, fb);
    }
    d = std::to_string(solved) + "/10 seeds reach > -1e-8 in 200 generations, " + fmt("%.2f s", elapsed) +
        "; candidate streams " + (identical ? "bit-identical" : "differ");
    return solved >= 9 && elapsed < 10.0 && identical;
  });

  criterion("expected improvement", [](std::string& d) {
    double worst = 0.0;
    // Stratified draws: one uniform per probability stratum, mapped through
    // the inverse normal CDF.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = 1000000;
    std::vector<double> z(n);
    int point = 0;
    for (double mu : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      for (double var : {0.05, 0.25, 1.0, 2.0}) {
        for (double best : {-0.5, 0.0, 0.3, 0.8, 1.5}) {
          ++point;
          const double s = std::sqrt(var);
          for (int i = 0; i < n; ++i) z[i] = gsl_cdf_ugaussian_Pinv((i + unit(rng)) / n);
          double total = 0.0;
          for (int i = 0; i < n; ++i) total += std::max(mu + s * z[i] - best, 0.0);
          worst = std::max(worst, std::abs(expected_improvement(mu, var, best) - total / n));
        }
      }
    }
    bool zero = true;
    for (double mu : {-1.0, 0.0, 0.7}) zero = zero && expected_improvement(mu, 0.0, 0.7) == 0.0;
    d = std::to_string(point) + "-point grid, max |closed form - stratified MC(1e6)| = " + fmt("%.2e", worst) +
        (zero ? "; EI(var=0, mu<=best) = 0" : "; EI(var=0) nonzero");
    return point == 100 && worst < 1e-3 && zero;
  });

  criterion("gaussian process", [](std::string& d) {
    double worst_mean = 0.0, worst_var = 0.0, worst_interp = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<std::vector<double>> X;
      std::vector<double> y;
      for (int i = 0; i < 5; ++i) {
        X.push_back({u(rng), u(rng), u(rng)});
        y.push_back(std::sin(5 * X.back()[0]) + X.back()[1] * X.back()[2] + u(rng));
      }
      const auto gp = GaussianProcess::fit(X, y, {3, seed, std::nullopt});
      const auto& h = gp.hyperparameters();
      for (int q = 0; q < 10; ++q) {
        const std::vector<double> x{u(rng), u(rng), u(rng)};
        const auto got = gp.predict(x);
        const auto want = oracle::gp_posterior(X, y, h.lengthscales, h.signal_variance, h.noise_variance, x);
        worst_mean = std::max(worst_mean, std::abs(got.mean - want.mean));
        worst_var = std::max(worst_var, std::abs(got.variance - want.variance));
      }
      const auto exact = GaussianProcess::fit(X, y, {3, seed, 0.0});
      for (std::size_t i = 0; i < X.size(); ++i) {
        worst_interp = std::max(worst_interp, std::abs(exact.predict(X[i]).mean - y[i]));
      }
    }
    d = fmt("20 problems: max mean err %.2e, max var err %.2e, interpolation err %.2e", worst_mean, worst_var,
            worst_interp);
    return worst_mean < 1e-8 && worst_var < 1e-8 && worst_interp < 1e-6;
  });

  criterion("bayesian optimization end to end", [](std::string& d) {
    const HyperParamSpace line({{"x", 0.0, 1.0, {}, "", {}}});
    const auto forrester = [](const ScaledVector& x) {
      const double t = x[0];
      return -(6 * t - 2) * (6 * t - 2) * std::sin(12 * t - 4);
    };
    int found = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      BoConfig cfg;
      cfg.budget = 30;
      cfg.seed = seed;
      const auto r = run_sequential_bo(forrester, line, cfg, SurrogateKind::gp);
      const auto best = std::max_element(r.history.begin(), r.history.end(),
                                         [](const auto& a, const auto& b) { return a.fitness < b.fitness; });
      found += std::abs(best->x[0] - 0.757249) < 0.01 ? 1 : 0;
    }
    d = std::to_string(found) + "/10 seeds within 0.01 of the Forrester optimum in 30 evaluations";
    return found >= 9;
  });

  criterion("k-means IoU", [](std::string& d) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> size(3, 8);
    std::uniform_real_distribution<double> u(0.02, 1.0);
    int matched = 0;
    bool monotone = true;
    for (int inst = 0; inst < 20; ++inst) {
      std::vector<Shape> s;
      const int n = size(rng);
      for (int i = 0; i < n; ++i) s.push_back({u(rng), u(rng)});
      const auto r = kmeans_iou_restarts(s, 2, static_cast<std::uint64_t>(inst), 5);
      matched += std::abs(r.total_distance - oracle::best_two_partition(s)) < 1e-9 ? 1 : 0;
      for (int restart = 0; restart < 5; ++restart) {
        const auto single = kmeans_iou(s, 2, mix_seed(inst, restart));
        for (std::size_t i = 1; i < single.trace.size(); ++i) {
          monotone = monotone && single.trace[i] <= single.trace[i - 1] + 1e-15;
        }
      }
    }
    d = std::to_string(matched) + "/20 instances equal the exhaustive optimum; objective " +
        (monotone ? "nonincreasing" : "increased");
    return matched == 20 && monotone;
  });

  criterion("regression analysis", [](std::string& d) {
    const auto space = HyperParamSpace::builtin("ssd");
    auto trials = synthetic::planted_regression_trials(space, 5);
    std::mt19937_64 rng(5);
    const auto r = fit_importance_regression(trials, space);
    double worst = std::max(std::abs(r.coefficients[0].second - 0.67), std::abs(r.coefficients[1].second - 0.25));
    for (std::size_t k = 2; k < 7; ++k) worst = std::max(worst, std::abs(r.coefficients[k].second));
    std::shuffle(trials.begin(), trials.end(), rng);
    const bool invariant = fit_importance_regression(trials, space).to_json().dump() == r.to_json().dump();
    d = fmt("coefficients %.3f, %.3f; max deviation %.3f; ", r.coefficients[0].second,
            r.coefficients[1].second, worst) +
        fmt("R^2 %.4f; ", r.r_squared) + (invariant ? "permutation invariant" : "permutation changed report");
    return worst <= 0.05 && r.r_squared >= 0.95 && invariant;
  });

  criterion("proxy objective", [](std::string& d) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::uniform_int_distribution<int> count(1, 30);
    double worst = 0.0;
    bool monotone = true;
    for (int inst = 0; inst < 50; ++inst) {
      std::vector<Shape> anchors, truth;
      const int na = count(rng), nt = count(rng);
      for (int i = 0; i < na; ++i) anchors.push_back({u(rng), u(rng)});
      for (int i = 0; i < nt; ++i) truth.push_back({u(rng), u(rng)});
      const double c = coverage_fitness(anchors, truth);
      worst = std::max(worst, std::abs(c - oracle::coverage(anchors, truth)));
      anchors.push_back({u(rng), u(rng)});
      monotone = monotone && coverage_fitness(anchors, truth) >= c;
    }

    const auto start = std::chrono::steady_clock::now();
    fs::create_directories("acceptance_scratch");
    const std::string ann = "acceptance_scratch/clusters.jsonl";
    const auto set = synthetic::clustered_annotations(3, 100, 5);
    synthetic::write_jsonl(set, ann);
    CampaignConfig config;
    config.space = "ssd";
    config.annotations = ann;
    config.seed = 1;
    config.out = "acceptance_scratch/proxy.jsonl";
    std::ostringstream sink;
    const auto result = run_campaign(config, sink);
    const auto space = HyperParamSpace::builtin("ssd");
    const double tuned = coverage_fitness(anchors_for(space, result.best->params_scaled), set);
    const double baseline = coverage_fitness(ssd_all_boxes(ssd_default_config()), set);
    const double elapsed = seconds_since(start);
    d = fmt("oracle max error %.2e; ", worst) + (monotone ? "superset monotone; " : "monotonicity broken; ") +
        fmt("coverage %.4f vs default %.4f (+%.4f), ", tuned, baseline, tuned - baseline) +
        fmt("%.1f s", elapsed);
    return worst <= 1e-12 && monotone && tuned - baseline >= 0.02 && elapsed < 60.0;
  });

  criterion("campaign accounting and resume", [](std::string& d) {
    fs::create_directories("acceptance_scratch");
    const std::string ann = "acceptance_scratch/accounting.jsonl";
    synthetic::write_jsonl(synthetic::clustered_annotations(4, 20, 4), ann);
    CampaignConfig config;
    config.space = "ssd";
    config.annotations = ann;
    config.lambda = 9;
    config.budget = 225;
    config.seed = 8;
    config.out = "acceptance_scratch/full.jsonl";
    std::ostringstream sink;
    const auto full = run_campaign(config, sink);
    const bool counts = full.trials == 225 && full.generations == 25 &&
                        load_trial_log(config.out).trials.size() == 225;

    // Kill after generation 3: keep everything through its state line.
    std::ifstream in(config.out);
    std::string kept;
    for (std::string line; std::getline(in, line);) {
      kept += line + '\n';
      const auto j = nlohmann::json::parse(line);
      if (j["type"] == "cmaes_state" && j["trials"] == 27) break;
    }
    const std::string partial = "acceptance_scratch/partial.jsonl";
    std::ofstream(partial, std::ios::binary) << kept << R"({"type":"trial","trial_id":27,"gen)";
    const auto resumed = resume_campaign(partial, config, sink);
    const bool same = comparable_log(partial) == comparable_log(config.out);

    auto changed = config;
    changed.lambda = 6;
    bool refused = false;
    try {
      resume_campaign(partial, changed, sink);
    } catch (const ConfigError&) {
      refused = true;
    }
    const bool noop = resume_campaign(partial, config, sink).already_complete;
    d = std::to_string(full.trials) + " trials over " + std::to_string(full.generations) +
        " generations; resumed-after-generation-3 log " + (same ? "identical" : "differs") +
        " (timestamps, wall times excluded); lambda change " + (refused ? "refused" : "accepted") +
        "; completed resume " + (noop ? "no-op" : "reran");
    return counts && resumed.trials == 225 && same && refused && noop;
  });

  std::printf("%s: %d failure(s)\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
