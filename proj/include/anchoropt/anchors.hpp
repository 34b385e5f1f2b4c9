#pragma once

#include <span>
#include <vector>

#include "anchoropt/space.hpp"

namespace anchoropt {

/// Width/height pair; a box shape without a position.
struct Shape {
  double w = 0.0;
  double h = 0.0;
};

/// Center-format box. Units (normalized or pixels) are the caller's concern
/// but must agree between boxes that are compared.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  /// From top-left corner and extent.
  static Box from_corner(double x, double y, double w, double h) {
    return {x + 0.5 * w, y + 0.5 * h, w, h};
  }
};

double iou(const Box& a, const Box& b);
/// IoU of two shapes placed on a common center.
double centered_iou(const Shape& a, const Shape& b);

/// Linear scale schedule s_k = s_min + (s_max - s_min)(k - 1)/(m - 1), k = 1..m.
std::vector<double> ssd_scale_schedule(double s_min, double s_max, int m);

/// w = s sqrt(a), h = s / sqrt(a); area is s^2 for every ratio.
Shape anchor_wh(double scale, double ratio);

/// Scale of the extra square box between two feature maps: sqrt(s_k s_{k+1}).
double constant_box_scale(double scale, double next_scale);

/// Per-layer SSD prior-box layout. `scales` may hold one more entry than there
/// are layers; the extra entry only feeds the last layer's constant box.
struct SsdAnchorConfig {
  std::vector<double> scales;
  std::vector<std::vector<double>> ratios_per_layer;
  std::vector<bool> include_constant_box;

  std::size_t num_layers() const { return ratios_per_layer.size(); }
  /// Throws ConfigError on scales outside (0, 1.06], ratio sets without 1, or
  /// mismatched list lengths.
  void validate() const;
};

/// Default SSD300 layout: scales [0.1, 0.2, 0.37, 0.54, 0.71, 0.88, 1.05],
/// full ratio set {1, 2, 1/2, 3, 1/3} except on layers 0, 4 and 5, which
/// use {1, 2, 1/2}; every layer carries the constant box.
SsdAnchorConfig ssd_default_config();
/// Default layout with the scales replaced.
SsdAnchorConfig ssd_config_with_scales(std::vector<double> scales);

/// Boxes of one layer: one per ratio in config order, then the constant box.
std::vector<Shape> ssd_layer_boxes(const SsdAnchorConfig& config, std::size_t layer);
/// All layers concatenated.
std::vector<Shape> ssd_all_boxes(const SsdAnchorConfig& config);

struct FrcnnAnchorConfig {
  double input_size = 600.0;
  std::vector<double> scales{128.0, 256.0, 512.0};
  std::vector<double> ratios{0.5, 1.0, 2.0};
  double base_size = kFrcnnBaseSize;
  int feature_width = 0;
  int feature_height = 0;
  double stride = kFrcnnBaseSize;

  /// Builds a config from the physical parameters of the faster_rcnn space.
  static FrcnnAnchorConfig from_physical(const PhysicalParams& params);
};

/// Scales x ratios (scales outer), each of area scale^2 and aspect w/h = ratio.
std::vector<Shape> frcnn_anchor_set(const FrcnnAnchorConfig& config);
/// The anchor set tiled at every cell center ((i + 0.5) stride, (j + 0.5) stride),
/// row-major over cells.
std::vector<Box> frcnn_grid(const FrcnnAnchorConfig& config);

}  // namespace anchoropt
