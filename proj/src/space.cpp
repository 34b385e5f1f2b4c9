#include "anchoropt/space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "anchoropt/errors.hpp"

namespace anchoropt {

namespace {

constexpr double kClipFraction = 1e-6;

HyperParam make_param(std::string name, double lo, double hi, Transform t, std::string unit,
                      double initial) {
  return HyperParam{std::move(name), lo, hi, t, std::move(unit), initial};
}

}  // namespace

double PhysicalParams::at(std::string_view name) const {
  for (const auto& [key, value] : entries_) {
    if (key == name) return value;
  }
  throw std::out_of_range("no physical parameter named '" + std::string(name) + "'");
}

HyperParamSpace::HyperParamSpace(std::vector<HyperParam> params, std::string name)
    : params_(std::move(params)), name_(std::move(name)) {
  if (params_.empty()) throw ConfigError("hyper-parameter space has no dimensions");
  std::set<std::string> seen;
  for (const auto& p : params_) {
    if (p.name.empty()) throw ConfigError("hyper-parameter with empty name");
    if (!seen.insert(p.name).second) throw ConfigError("duplicate hyper-parameter '" + p.name + "'");
    if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo < p.hi)) {
      throw ConfigError("hyper-parameter '" + p.name + "' needs finite lo < hi");
    }
    if (!(p.transform.mul > 0.0) || !std::isfinite(p.transform.add)) {
      throw ConfigError("hyper-parameter '" + p.name + "' needs a positive transform multiplier");
    }
    // Monotone increasing, so the image of (lo, hi] is (apply(lo), apply(hi)].
    if (p.transform.apply(p.lo) < 0.0) {
      throw ConfigError("transform of '" + p.name + "' is not positive over its range");
    }
    if (p.initial && !(*p.initial > p.lo && *p.initial <= p.hi)) {
      throw ConfigError("initial value of '" + p.name + "' lies outside its range");
    }
  }
}

HyperParamSpace HyperParamSpace::builtin(BuiltinSpace kind) {
  std::vector<HyperParam> params;
  switch (kind) {
    case BuiltinSpace::faster_rcnn: {
      params.push_back(make_param("input_size", 0.3, 0.7, {1000.0, 0.0}, "pixels", 0.6));
      const double ratio_init[] = {0.25, 0.5, 1.0};
      for (int i = 0; i < 3; ++i) {
        params.push_back(make_param("ratio_" + std::to_string(i + 1), 0.0, 1.0, {2.0, 0.0},
                                    "aspect ratio", ratio_init[i]));
      }
      const double scale_init[] = {0.25, 0.5, 1.0};
      for (int i = 0; i < 3; ++i) {
        params.push_back(make_param("scale_" + std::to_string(i + 1), 0.0, 1.0,
                                    {32.0 * kFrcnnBaseSize, 0.0}, "pixels", scale_init[i]));
      }
      return HyperParamSpace(std::move(params), "faster_rcnn");
    }
    case BuiltinSpace::ssd: {
      const double init[] = {0.1, 0.2, 0.37, 0.54, 0.71, 0.88, 1.05};
      for (int i = 0; i < 7; ++i) {
        params.push_back(make_param("scale_" + std::to_string(i), 0.0, 1.06, {}, "relative scale",
                                    init[i]));
      }
      return HyperParamSpace(std::move(params), "ssd");
    }
  }
  throw ConfigError("unknown builtin space");
}

bool HyperParamSpace::is_builtin_name(std::string_view kind) {
  return kind == "faster_rcnn" || kind == "ssd";
}

HyperParamSpace HyperParamSpace::builtin(std::string_view kind) {
  if (kind == "faster_rcnn") return builtin(BuiltinSpace::faster_rcnn);
  if (kind == "ssd") return builtin(BuiltinSpace::ssd);
  throw ConfigError("unknown builtin space '" + std::string(kind) + "' (expected faster_rcnn or ssd)");
}

HyperParamSpace HyperParamSpace::from_json(const nlohmann::json& j) {
  try {
    std::vector<HyperParam> params;
    for (const auto& item : j.at("params")) {
      HyperParam p;
      p.name = item.at("name").get<std::string>();
      p.lo = item.at("lo").get<double>();
      p.hi = item.at("hi").get<double>();
      if (item.contains("transform")) {
        const auto& t = item.at("transform");
        p.transform.mul = t.value("mul", 1.0);
        p.transform.add = t.value("add", 0.0);
      }
      p.unit = item.value("unit", "");
      if (item.contains("initial")) p.initial = item.at("initial").get<double>();
      params.push_back(std::move(p));
    }
    return HyperParamSpace(std::move(params), j.value("name", "custom"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed space definition: ") + e.what());
  }
}

HyperParamSpace HyperParamSpace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open space file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("space file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json HyperParamSpace::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : params_) {
    nlohmann::json item = {{"name", p.name},
                           {"lo", p.lo},
                           {"hi", p.hi},
                           {"transform", {{"mul", p.transform.mul}, {"add", p.transform.add}}},
                           {"unit", p.unit}};
    if (p.initial) item["initial"] = *p.initial;
    params.push_back(std::move(item));
  }
  return {{"name", name_}, {"params", std::move(params)}};
}

double HyperParamSpace::lower_bound(std::size_t i) const {
  const auto& p = params_[i];
  return p.lo + kClipFraction * (p.hi - p.lo);
}

void HyperParamSpace::check_dimension(std::span<const double> v) const {
  if (v.size() != params_.size()) {
    std::ostringstream msg;
    msg << "vector has " << v.size() << " entries, space '" << name_ << "' has " << params_.size();
    throw ContractError(msg.str());
  }
}

ScaledVector HyperParamSpace::clip(std::span<const double> v) const {
  check_dimension(v);
  ScaledVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double lo = lower_bound(i);
    // NaN maps to the lower bound rather than propagating.
    out[i] = std::isnan(v[i]) ? lo : std::clamp(v[i], lo, params_[i].hi);
  }
  return out;
}

bool HyperParamSpace::contains(std::span<const double> v) const {
  if (v.size() != params_.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lower_bound(i) && v[i] <= params_[i].hi)) return false;
  }
  return true;
}

PhysicalParams HyperParamSpace::transform(std::span<const double> v) const {
  check_dimension(v);
  std::vector<std::pair<std::string, double>> entries;
  entries.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    entries.emplace_back(params_[i].name, params_[i].transform.apply(v[i]));
  }
  return PhysicalParams(std::move(entries));
}

ScaledVector HyperParamSpace::initial_vector() const {
  ScaledVector v(params_.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = params_[i];
    v[i] = p.initial.value_or(0.5 * (p.lo + p.hi));
  }
  return clip(v);
}

ScaledVector HyperParamSpace::sample_uniform(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScaledVector v(params_.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // u in [0, 1) gives hi - u (hi - lo) in (lo, hi].
    v[i] = params_[i].hi - unit(rng) * (params_[i].hi - params_[i].lo);
  }
  return clip(v);
}

ScaledVector HyperParamSpace::sample_uniform(std::uint64_t seed) const {
  Rng rng(seed);
  return sample_uniform(rng);
}

}  // namespace anchoropt
