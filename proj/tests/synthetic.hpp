// Synthetic ground truth for the proxy objective and the regression analysis.
#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchoropt/objective.hpp"
#include "anchoropt/space.hpp"
#include "anchoropt/trial_log.hpp"

namespace synthetic {

struct Cluster {
  double w;  ///< normalized width
  double h;  ///< normalized height
};

// Small objects in three tight shape clusters. SSD's default scales start
// at 0.1 and grow quickly, so they cover these poorly.
inline const std::vector<Cluster> kSmallObjectClusters{{0.05, 0.07}, {0.12, 0.06}, {0.09, 0.16}};

/// `images` 500x400 images with `per_image` boxes each; shapes jittered by
/// +-5% around the clusters.
inline anchoropt::AnnotationSet clustered_annotations(std::uint64_t seed, int images = 60, int per_image = 5,
                                                      const std::vector<Cluster>& clusters = kSmallObjectClusters) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, clusters.size() - 1);
  std::uniform_real_distribution<double> jitter(0.95, 1.05);
  std::vector<anchoropt::ImageAnnotation> out;
  for (int i = 0; i < images; ++i) {
    anchoropt::ImageAnnotation img;
    img.image_id = "img" + std::to_string(1000 + i);
    img.width = 500;
    img.height = 400;
    for (int b = 0; b < per_image; ++b) {
      const auto& c = clusters[pick(rng)];
      const double w = c.w * jitter(rng) * img.width;
      const double h = c.h * jitter(rng) * img.height;
      img.boxes.push_back({10.0, 10.0, w, h, 0});
    }
    out.push_back(std::move(img));
  }
  return anchoropt::AnnotationSet(std::move(out));
}

inline void write_jsonl(const anchoropt::AnnotationSet& set, const std::string& path) {
  std::ofstream out(path);
  for (const auto& img : set.images()) {
    nlohmann::json boxes = nlohmann::json::array();
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& b : img.boxes) {
      boxes.push_back({b.x, b.y, b.w, b.h});
      classes.push_back(b.class_id);
    }
    out << nlohmann::json{{"image_id", img.image_id},
                          {"width", img.width},
                          {"height", img.height},
                          {"boxes", boxes},
                          {"classes", classes}}
               .dump()
        << "\n";
  }
}

/// 200 trials whose fitness is 0.67 * x0 + 0.25 * x1 + U(-0.04, 0.04) on
/// min-max normalized inputs. Trials 0 and 1 sit at the low and high corners
/// with the extreme noise values, so the fitness spans exactly [0, 1] and
/// min-max normalization leaves the planted coefficients unscaled.
inline std::vector<anchoropt::Trial> planted_regression_trials(const anchoropt::HyperParamSpace& space,
                                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.04, 0.04);
  std::vector<anchoropt::Trial> trials;
  for (long i = 0; i < 200; ++i) {
    anchoropt::ScaledVector x = space.sample_uniform(rng);
    double e = noise(rng);
    if (i == 0) {
      x[0] = space.lower_bound(0);
      x[1] = space.lower_bound(1);
      e = -0.04;
    }
    if (i == 1) {
      x[0] = space[0].hi;
      x[1] = space[1].hi;
      e = 0.04;
    }
    const double x0 = (x[0] - space.lower_bound(0)) / (space[0].hi - space.lower_bound(0));
    const double x1 = (x[1] - space.lower_bound(1)) / (space[1].hi - space.lower_bound(1));
    anchoropt::Trial t;
    t.trial_id = i;
    t.generation = static_cast<int>(i / 9);
    t.params_scaled = x;
    t.fitness = 0.04 + 0.67 * x0 + 0.25 * x1 + e;
    t.ok = true;
    trials.push_back(t);
  }
  return trials;
}

}  // namespace synthetic
