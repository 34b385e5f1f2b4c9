#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>

#include "anchoropt/analysis.hpp"
#include "anchoropt/errors.hpp"
#include "anchoropt/random.hpp"

namespace anchoropt {

namespace {

struct Nearest {
  int index = 0;
  double distance = 0.0;
};

Nearest nearest(const Shape& s, std::span<const Shape> centroids) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = iou_distance(s, centroids[c]);
    if (d < best.distance) best = {static_cast<int>(c), d};
  }
  return best;
}

std::vector<Shape> seed_centroids(std::span<const Shape> shapes, int k, Rng& rng) {
  std::vector<Shape> centroids;
  std::uniform_int_distribution<std::size_t> uniform(0, shapes.size() - 1);
  centroids.push_back(shapes[uniform(rng)]);
  std::vector<double> weight(shapes.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const double d = nearest(shapes[i], centroids).distance;
      weight[i] = d * d;
      total += weight[i];
    }
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
      centroids.push_back(shapes[pick(rng)]);
    } else {
      centroids.push_back(shapes[uniform(rng)]);
    }
  }
  return centroids;
}

// Centroids are the per-cluster means; returns the summed distance of each
// shape to its own cluster's centroid.
double update_means(std::span<const Shape> shapes, const std::vector<int>& assignment, std::vector<Shape>& centroids) {
  std::vector<double> sum_w(centroids.size(), 0.0), sum_h(centroids.size(), 0.0);
  std::vector<std::size_t> count(centroids.size(), 0);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto c = static_cast<std::size_t>(assignment[i]);
    sum_w[c] += shapes[i].w;
    sum_h[c] += shapes[i].h;
    ++count[c];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    centroids[c] = {sum_w[c] / static_cast<double>(count[c]), sum_h[c] / static_cast<double>(count[c])};
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    cost += iou_distance(shapes[i], centroids[static_cast<std::size_t>(assignment[i])]);
  }
  return cost;
}

// Nearest-centroid assignment; an emptied cluster takes the shape farthest
// from its nearest centroid.
std::vector<int> assign_nearest(std::span<const Shape> shapes, std::span<const Shape> centroids) {
  std::vector<int> assignment(shapes.size());
  std::vector<double> distance(shapes.size());
  std::vector<std::size_t> count(centroids.size(), 0);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const Nearest n = nearest(shapes[i], centroids);
    assignment[i] = n.index;
    distance[i] = n.distance;
    ++count[static_cast<std::size_t>(n.index)];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (count[c] > 0) continue;
    std::size_t far = shapes.size();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      if (count[static_cast<std::size_t>(assignment[i])] < 2) continue;
      if (far == shapes.size() || distance[i] > distance[far]) far = i;
    }
    --count[static_cast<std::size_t>(assignment[far])];
    assignment[far] = static_cast<int>(c);
    distance[far] = 0.0;
    count[c] = 1;
  }
  return assignment;
}

constexpr std::size_t kExchangeLimit = 64;

double mean_cost(const std::vector<Shape>& members) {
  if (members.empty()) return 0.0;
  double w = 0.0;
  double h = 0.0;
  for (const auto& s : members) {
    w += s.w;
    h += s.h;
  }
  const Shape c{w / static_cast<double>(members.size()), h / static_cast<double>(members.size())};
  double total = 0.0;
  for (const auto& s : members) total += iou_distance(s, c);
  return total;
}

std::vector<Shape> members_of(std::span<const Shape> shapes, const std::vector<int>& assignment, int cluster,
                              std::size_t leave = SIZE_MAX, const Shape* join = nullptr) {
  std::vector<Shape> out;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (assignment[i] == cluster && i != leave) out.push_back(shapes[i]);
  }
  if (join != nullptr) out.push_back(*join);
  return out;
}

// Applies the first single-shape move that lowers the summed mean-centroid
// distance; on small inputs, reassignments of two shapes at once are tried
// next. Returns false when nothing helps.
bool improving_move(std::span<const Shape> shapes, std::vector<int>& assignment, int k) {
  std::vector<double> costs(static_cast<std::size_t>(k));
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int c = 0; c < k; ++c) costs[static_cast<std::size_t>(c)] = mean_cost(members_of(shapes, assignment, c));
  for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  constexpr double kGain = 1e-12;

  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const int from = assignment[i];
    if (sizes[static_cast<std::size_t>(from)] < 2) continue;
    const double from_after = mean_cost(members_of(shapes, assignment, from, i));
    for (int to = 0; to < k; ++to) {
      if (to == from) continue;
      const double to_after = mean_cost(members_of(shapes, assignment, to, SIZE_MAX, &shapes[i]));
      if (from_after + to_after < costs[static_cast<std::size_t>(from)] + costs[static_cast<std::size_t>(to)] - kGain) {
        assignment[i] = to;
        return true;
      }
    }
  }
  if (shapes.size() > kExchangeLimit) return false;
  // Pairs: both shapes leave their clusters, each joins any other cluster.
  std::vector<int> trial = assignment;
  std::vector<bool> touched(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    for (std::size_t j = i + 1; j < shapes.size(); ++j) {
      for (int ti = 0; ti < k; ++ti) {
        if (ti == assignment[i]) continue;
        for (int tj = 0; tj < k; ++tj) {
          if (tj == assignment[j]) continue;
          trial[i] = ti;
          trial[j] = tj;
          std::fill(touched.begin(), touched.end(), false);
          for (int c : {assignment[i], assignment[j], ti, tj}) touched[static_cast<std::size_t>(c)] = true;
          double before = 0.0;
          double after = 0.0;
          bool empty = false;
          for (int c = 0; c < k; ++c) {
            if (!touched[static_cast<std::size_t>(c)]) continue;
            const auto m = members_of(shapes, trial, c);
            empty |= m.empty();
            before += costs[static_cast<std::size_t>(c)];
            after += mean_cost(m);
          }
          if (!empty && after < before - kGain) {
            assignment = trial;
            return true;
          }
          trial[i] = assignment[i];
          trial[j] = assignment[j];
        }
      }
    }
  }
  return false;
}

}  // namespace

double iou_distance(const Shape& a, const Shape& b) { return 1.0 - centered_iou(a, b); }

KmeansResult kmeans_iou(std::span<const Shape> shapes, int k, std::uint64_t seed, int max_iters) {
  if (k < 1) throw ContractError("k-means needs k >= 1");
  if (shapes.size() < static_cast<std::size_t>(k)) throw ContractError("k-means needs at least k shapes");
  for (const auto& s : shapes) {
    if (!(s.w > 0.0) || !(s.h > 0.0)) throw ContractError("k-means shapes need positive extents");
  }

  Rng rng(seed);
  KmeansResult result;
  result.centroids = seed_centroids(shapes, k, rng);
  result.assignment = assign_nearest(shapes, result.centroids);
  result.total_distance = update_means(shapes, result.assignment, result.centroids);
  result.trace.push_back(result.total_distance);

  // Lloyd steps with mean centroids. The mean does not minimize the IoU
  // distance, so a step that would not lower the objective is replaced by a
  // local move; the run ends when nothing helps.
  for (int iter = 0; iter < std::max(max_iters, 1); ++iter) {
    result.iterations = iter + 1;
    std::vector<int> next = assign_nearest(shapes, result.centroids);
    std::vector<Shape> centroids(result.centroids.size());
    double cost = next == result.assignment ? result.total_distance : update_means(shapes, next, centroids);
    if (!(cost < result.total_distance)) {
      next = result.assignment;
      if (!improving_move(shapes, next, k)) break;
      cost = update_means(shapes, next, centroids);
    }
    result.assignment = std::move(next);
    result.centroids = std::move(centroids);
    result.total_distance = cost;
    result.trace.push_back(cost);
  }
  return result;
}

KmeansResult kmeans_iou_restarts(std::span<const Shape> shapes, int k, std::uint64_t seed,
                                 int restarts, int max_iters) {
  KmeansResult best;
  best.total_distance = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    KmeansResult run = kmeans_iou(shapes, k, mix_seed(seed, static_cast<std::uint64_t>(r)), max_iters);
    if (run.total_distance < best.total_distance) best = std::move(run);
  }
  return best;
}

}  // namespace anchoropt
