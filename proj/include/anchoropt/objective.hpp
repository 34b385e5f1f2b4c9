#pragma once

#include <istream>
#include <span>
#include <string>
#include <vector>

#include "anchoropt/anchors.hpp"
#include "anchoropt/space.hpp"

namespace anchoropt {

struct GroundTruthBox {
  double x = 0.0;  ///< top-left, pixels
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  int class_id = 0;
};

struct ImageAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<GroundTruthBox> boxes;
};

/// Ground-truth boxes for the proxy objective, sorted by image_id.
///
/// File format: JSON lines, one image per line,
///   {"image_id": str, "width": int, "height": int,
///    "boxes": [[x, y, w, h], ...], "classes": [int, ...]}
/// in pixels with a top-left origin. Blank lines are skipped.
class AnnotationSet {
 public:
  AnnotationSet() = default;
  /// Validates and sorts; throws ConfigError on duplicate ids, zero-extent or
  /// out-of-image boxes.
  explicit AnnotationSet(std::vector<ImageAnnotation> images);

  static AnnotationSet parse(std::istream& in);
  static AnnotationSet load(const std::string& path);

  const std::vector<ImageAnnotation>& images() const { return images_; }
  bool empty() const { return box_count() == 0; }
  std::size_t box_count() const;

  /// (w / width, h / height) per box: SSD-style square resize.
  std::vector<Shape> normalized_shapes() const;
  /// (w, h) / min(width, height) per box: Faster R-CNN shortest-side resize.
  std::vector<Shape> shortest_side_shapes() const;

 private:
  std::vector<ImageAnnotation> images_;
};

/// Mean over ground-truth shapes of the best centered IoU against any anchor.
double coverage_fitness(std::span<const Shape> anchors, std::span<const Shape> truth);
double coverage_fitness(std::span<const Shape> anchors, const AnnotationSet& annotations);

/// Fraction of ground-truth shapes whose best centered IoU reaches threshold.
double recall_at_iou(std::span<const Shape> anchors, std::span<const Shape> truth, double threshold);
double recall_at_iou(std::span<const Shape> anchors, const AnnotationSet& annotations,
                     double threshold);

/// Anchor shapes a builtin space produces for a scaled vector, in the same
/// normalization as ProxyObjective's ground truth.
std::vector<Shape> anchors_for(const HyperParamSpace& space, std::span<const double> scaled);

/// Desk-scale fitness: coverage of the annotation set by the anchors a scaled
/// vector describes. Only the builtin ssd and faster_rcnn spaces are supported.
class ProxyObjective {
 public:
  ProxyObjective(HyperParamSpace space, const AnnotationSet& annotations);

  double operator()(std::span<const double> scaled) const;
  const std::vector<Shape>& truth() const { return truth_; }

 private:
  HyperParamSpace space_;
  std::vector<Shape> truth_;
};

}  // namespace anchoropt
