#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchoropt/random.hpp"

namespace anchoropt {

/// Affine map from a scaled coordinate to the value the detector consumes.
/// Identity is mul = 1, add = 0.
struct Transform {
  double mul = 1.0;
  double add = 0.0;

  double apply(double x) const { return mul * x + add; }
  bool is_identity() const { return mul == 1.0 && add == 0.0; }
};

/// One continuous dimension with range (lo, hi].
struct HyperParam {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  Transform transform;
  std::string unit;
  /// Scaled starting value; optimizers fall back to the range midpoint.
  std::optional<double> initial;
};

using ScaledVector = std::vector<double>;

/// Named physical values in space order.
class PhysicalParams {
 public:
  PhysicalParams() = default;
  explicit PhysicalParams(std::vector<std::pair<std::string, double>> entries)
      : entries_(std::move(entries)) {}

  /// Throws std::out_of_range for unknown names.
  double at(std::string_view name) const;
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

enum class BuiltinSpace { faster_rcnn, ssd };

/// Base size B_s of the Faster R-CNN anchor generator; fixed, not tuned.
inline constexpr double kFrcnnBaseSize = 16.0;

/// Ordered set of hyper-parameters. The order defines the vector layout used
/// by every optimizer. Immutable after construction.
class HyperParamSpace {
 public:
  /// Validates names (unique, non-empty), ranges (lo < hi) and transforms
  /// (positive multiplier, positive image of (lo, hi]). Throws ConfigError.
  explicit HyperParamSpace(std::vector<HyperParam> params, std::string name = "custom");

  static HyperParamSpace builtin(BuiltinSpace kind);
  /// "faster_rcnn" or "ssd"; anything else is a ConfigError.
  static HyperParamSpace builtin(std::string_view kind);
  static bool is_builtin_name(std::string_view kind);

  static HyperParamSpace from_json(const nlohmann::json& j);
  static HyperParamSpace load(const std::string& path);
  nlohmann::json to_json() const;

  const std::string& name() const { return name_; }
  std::size_t size() const { return params_.size(); }
  const std::vector<HyperParam>& params() const { return params_; }
  const HyperParam& operator[](std::size_t i) const { return params_[i]; }

  /// Lower clamp bound for dimension i: lo + 1e-6 (hi - lo).
  double lower_bound(std::size_t i) const;

  /// Clamp each coordinate into [lo + eps, hi]. Idempotent.
  ScaledVector clip(std::span<const double> v) const;
  bool contains(std::span<const double> v) const;

  PhysicalParams transform(std::span<const double> v) const;

  /// Per-dimension initial values (or midpoints), clipped.
  ScaledVector initial_vector() const;

  ScaledVector sample_uniform(Rng& rng) const;
  ScaledVector sample_uniform(std::uint64_t seed) const;

 private:
  void check_dimension(std::span<const double> v) const;

  std::vector<HyperParam> params_;
  std::string name_;
};

}  // namespace anchoropt
