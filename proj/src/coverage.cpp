#include <algorithm>

#include "anchoropt/errors.hpp"
#include "anchoropt/objective.hpp"

namespace anchoropt {

namespace {

double best_match(std::span<const Shape> anchors, const Shape& truth) {
  double best = 0.0;
  for (const auto& a : anchors) best = std::max(best, centered_iou(a, truth));
  return best;
}

}  // namespace

double coverage_fitness(std::span<const Shape> anchors, std::span<const Shape> truth) {
  if (anchors.empty()) throw ContractError("coverage needs at least one anchor");
  if (truth.empty()) throw ContractError("coverage needs at least one ground-truth box");
  double sum = 0.0;
  for (const auto& t : truth) sum += best_match(anchors, t);
  return sum / static_cast<double>(truth.size());
}

double coverage_fitness(std::span<const Shape> anchors, const AnnotationSet& annotations) {
  return coverage_fitness(anchors, annotations.normalized_shapes());
}

double recall_at_iou(std::span<const Shape> anchors, std::span<const Shape> truth, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ContractError("recall threshold must lie in (0, 1)");
  if (truth.empty()) throw ContractError("recall needs at least one ground-truth box");
  std::size_t hits = 0;
  for (const auto& t : truth) hits += best_match(anchors, t) >= threshold ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double recall_at_iou(std::span<const Shape> anchors, const AnnotationSet& annotations,
                     double threshold) {
  return recall_at_iou(anchors, annotations.normalized_shapes(), threshold);
}

std::vector<Shape> anchors_for(const HyperParamSpace& space, std::span<const double> scaled) {
  const PhysicalParams physical = space.transform(scaled);
  if (space.name() == "ssd") {
    std::vector<double> scales;
    for (const auto& [name, value] : physical.entries()) scales.push_back(value);
    return ssd_all_boxes(ssd_config_with_scales(std::move(scales)));
  }
  if (space.name() == "faster_rcnn") {
    const auto config = FrcnnAnchorConfig::from_physical(physical);
    auto anchors = frcnn_anchor_set(config);
    for (auto& a : anchors) {
      a.w /= config.input_size;
      a.h /= config.input_size;
    }
    return anchors;
  }
  throw ConfigError("the proxy objective supports only the builtin ssd and faster_rcnn spaces");
}

ProxyObjective::ProxyObjective(HyperParamSpace space, const AnnotationSet& annotations)
    : space_(std::move(space)) {
  if (space_.name() == "ssd") {
    truth_ = annotations.normalized_shapes();
  } else if (space_.name() == "faster_rcnn") {
    truth_ = annotations.shortest_side_shapes();
  } else {
    throw ConfigError("the proxy objective supports only the builtin ssd and faster_rcnn spaces");
  }
  if (truth_.empty()) throw ConfigError("the proxy objective needs at least one annotated box");
}

double ProxyObjective::operator()(std::span<const double> scaled) const {
  return coverage_fitness(anchors_for(space_, scaled), truth_);
}

}  // namespace anchoropt
