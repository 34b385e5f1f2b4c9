#include "anchoropt/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anchoropt/errors.hpp"

namespace anchoropt {

namespace {

constexpr double kMaxSsdScale = 1.06;

}  // namespace

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.cx + 0.5 * a.w, b.cx + 0.5 * b.w) -
                    std::max(a.cx - 0.5 * a.w, b.cx - 0.5 * b.w);
  const double iy = std::min(a.cy + 0.5 * a.h, b.cy + 0.5 * b.h) -
                    std::max(a.cy - 0.5 * a.h, b.cy - 0.5 * b.h);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

double centered_iou(const Shape& a, const Shape& b) {
  const double inter = std::min(a.w, b.w) * std::min(a.h, b.h);
  return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<double> ssd_scale_schedule(double s_min, double s_max, int m) {
  if (m < 2) throw ContractError("scale schedule needs at least two feature maps");
  if (!(s_min > 0.0) || !(s_min <= s_max)) throw ContractError("scale schedule needs 0 < s_min <= s_max");
  std::vector<double> scales(static_cast<std::size_t>(m));
  const double step = (s_max - s_min) / (m - 1);
  for (int k = 1; k <= m; ++k) scales[static_cast<std::size_t>(k - 1)] = s_min + step * (k - 1);
  scales.back() = s_max;
  return scales;
}

Shape anchor_wh(double scale, double ratio) {
  const double root = std::sqrt(ratio);
  return {scale * root, scale / root};
}

double constant_box_scale(double scale, double next_scale) {
  return std::sqrt(scale * next_scale);
}

void SsdAnchorConfig::validate() const {
  if (ratios_per_layer.empty()) throw ConfigError("SSD config has no layers");
  if (include_constant_box.size() != ratios_per_layer.size()) {
    throw ConfigError("SSD config needs one constant-box flag per layer");
  }
  if (scales.size() < ratios_per_layer.size()) throw ConfigError("SSD config needs one scale per layer");
  for (double s : scales) {
    if (!(s > 0.0 && s <= kMaxSsdScale)) {
      throw ConfigError("SSD scale " + std::to_string(s) + " outside (0, 1.06]");
    }
  }
  for (const auto& ratios : ratios_per_layer) {
    if (std::find(ratios.begin(), ratios.end(), 1.0) == ratios.end()) {
      throw ConfigError("every SSD ratio set must contain 1");
    }
    for (double r : ratios) {
      if (!(r > 0.0)) throw ConfigError("SSD aspect ratios must be positive");
    }
  }
}

SsdAnchorConfig ssd_config_with_scales(std::vector<double> scales) {
  const std::vector<double> reduced{1.0, 2.0, 0.5};
  const std::vector<double> full{1.0, 2.0, 0.5, 3.0, 1.0 / 3.0};
  SsdAnchorConfig config;
  config.scales = std::move(scales);
  config.ratios_per_layer = {reduced, full, full, full, reduced, reduced};
  config.include_constant_box.assign(6, true);
  config.validate();
  return config;
}

SsdAnchorConfig ssd_default_config() {
  return ssd_config_with_scales({0.1, 0.2, 0.37, 0.54, 0.71, 0.88, 1.05});
}

std::vector<Shape> ssd_layer_boxes(const SsdAnchorConfig& config, std::size_t layer) {
  if (layer >= config.num_layers()) {
    throw ContractError("SSD layer index " + std::to_string(layer) + " out of range");
  }
  const double s = config.scales[layer];
  std::vector<Shape> boxes;
  for (double r : config.ratios_per_layer[layer]) boxes.push_back(anchor_wh(s, r));
  if (config.include_constant_box[layer]) {
    if (layer + 1 >= config.scales.size()) {
      throw ContractError("constant box on layer " + std::to_string(layer) + " needs a next scale");
    }
    const double c = constant_box_scale(s, config.scales[layer + 1]);
    boxes.push_back({c, c});
  }
  return boxes;
}

std::vector<Shape> ssd_all_boxes(const SsdAnchorConfig& config) {
  std::vector<Shape> all;
  for (std::size_t l = 0; l < config.num_layers(); ++l) {
    auto layer = ssd_layer_boxes(config, l);
    all.insert(all.end(), layer.begin(), layer.end());
  }
  return all;
}

FrcnnAnchorConfig FrcnnAnchorConfig::from_physical(const PhysicalParams& params) {
  FrcnnAnchorConfig config;
  config.input_size = params.at("input_size");
  config.ratios = {params.at("ratio_1"), params.at("ratio_2"), params.at("ratio_3")};
  config.scales = {params.at("scale_1"), params.at("scale_2"), params.at("scale_3")};
  return config;
}

std::vector<Shape> frcnn_anchor_set(const FrcnnAnchorConfig& config) {
  std::vector<Shape> anchors;
  anchors.reserve(config.scales.size() * config.ratios.size());
  for (double s : config.scales) {
    if (!(s > 0.0)) throw ContractError("anchor scales must be positive");
    for (double r : config.ratios) {
      if (!(r > 0.0)) throw ContractError("anchor ratios must be positive");
      anchors.push_back(anchor_wh(s, r));
    }
  }
  return anchors;
}

std::vector<Box> frcnn_grid(const FrcnnAnchorConfig& config) {
  if (config.feature_width < 0 || config.feature_height < 0) {
    throw ContractError("feature map dimensions must be non-negative");
  }
  const auto set = frcnn_anchor_set(config);
  std::vector<Box> grid;
  grid.reserve(static_cast<std::size_t>(config.feature_width) *
               static_cast<std::size_t>(config.feature_height) * set.size());
  for (int j = 0; j < config.feature_height; ++j) {
    for (int i = 0; i < config.feature_width; ++i) {
      const double cx = (i + 0.5) * config.stride;
      const double cy = (j + 0.5) * config.stride;
      for (const auto& a : set) grid.push_back({cx, cy, a.w, a.h});
    }
  }
  return grid;
}

}  // namespace anchoropt
