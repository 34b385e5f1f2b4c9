#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "anchoropt/analysis.hpp"

namespace anchoropt {

std::vector<GenerationStats> generation_stats(std::span<const Trial> trials) {
  std::map<int, std::vector<double>> finite;
  std::map<int, GenerationStats> stats;
  for (const auto& t : trials) {
    auto& s = stats[t.generation];
    s.generation = t.generation;
    ++s.evaluated;
    if (std::isfinite(t.fitness)) {
      finite[t.generation].push_back(t.fitness);
    } else {
      ++s.failures;
    }
  }

  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<GenerationStats> out;
  double best = -std::numeric_limits<double>::infinity();
  for (auto& [generation, s] : stats) {
    auto& values = finite[generation];
    if (values.empty()) {
      s.min_fitness = s.median_fitness = s.max_fitness = nan;
    } else {
      std::sort(values.begin(), values.end());
      const std::size_t m = values.size();
      s.min_fitness = values.front();
      s.max_fitness = values.back();
      s.median_fitness = m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
      best = std::max(best, s.max_fitness);
    }
    s.best_so_far = best;
    out.push_back(s);
  }
  return out;
}

void write_generation_csv(std::ostream& out, std::span<const GenerationStats> stats) {
  out << "generation,min,median,max,best_so_far,failures\n";
  const auto old_precision = out.precision(17);
  for (const auto& s : stats) {
    out << s.generation << ',' << s.min_fitness << ',' << s.median_fitness << ',' << s.max_fitness
        << ',' << s.best_so_far << ',' << s.failures << '\n';
  }
  out.precision(old_precision);
}

}  // namespace anchoropt
