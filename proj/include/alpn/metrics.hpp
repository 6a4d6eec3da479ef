#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "alpn/agent.hpp"
#include "alpn/catalog.hpp"
#include "alpn/errors.hpp"

namespace alpn {

// The sequence of exercises recommended within one episode.
struct LearningPath {
  std::vector<int> exercises;
};

// Pairwise learning-path diversity in [0, 1]: 0 for identical cohorts, 1 for
// fully disjoint paths. Overlap is the multiset intersection (repeats count
// up to the smaller multiplicity), each ordered-pair term 1 - |Pi & Pj| / l_i
// is clamped to [0, 1], and the sum is normalized by N(N-1).
inline double div_metric(const std::vector<LearningPath>& paths) {
  const std::size_t n = paths.size();
  if (n < 2) throw ConfigError("div: at least two paths are required");
  int max_id = 0;
  for (const LearningPath& p : paths) {
    if (p.exercises.empty()) throw ConfigError("div: empty path");
    for (int e : p.exercises) max_id = std::max(max_id, e);
  }
  std::vector<std::vector<int>> counts(n, std::vector<int>(max_id + 1, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (int e : paths[i].exercises) ++counts[i][e];
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double li = static_cast<double>(paths[i].exercises.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      long overlap = 0;
      for (int e = 0; e <= max_id; ++e) {
        overlap += std::min(counts[i][e], counts[j][e]);
      }
      const double term = 1.0 - static_cast<double>(overlap) / li;
      sum += std::clamp(term, 0.0, 1.0);
    }
  }
  return sum / static_cast<double>(n * (n - 1));
}

// Per-area mean knowledge over time: entry (a, t) averages s_j over the
// exercises of area a. Areas without exercises yield NaN entries.
inline Matrix area_mastery_matrix(const std::vector<KnowledgeState>& states,
                                  const ExerciseCatalog& catalog) {
  if (states.empty()) throw ConfigError("area_mastery_matrix: no states");
  const int areas = catalog.area_count();
  std::vector<int> area_size(areas, 0);
  for (const ExerciseInfo& e : catalog.exercises()) ++area_size[e.area_id];
  Matrix out(areas, static_cast<Eigen::Index>(states.size()));
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (states[t].size() != catalog.size()) {
      throw ConfigError("area_mastery_matrix: state length differs from the "
                        "catalog");
    }
    Vector acc = Vector::Zero(areas);
    for (const ExerciseInfo& e : catalog.exercises()) {
      acc[e.area_id] += states[t][e.exercise_id];
    }
    for (int a = 0; a < areas; ++a) {
      out(a, static_cast<Eigen::Index>(t)) =
          area_size[a] > 0 ? acc[a] / area_size[a]
                           : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

// Trailing moving average with partial windows at the head.
inline std::vector<double> moving_average(const std::vector<double>& xs,
                                          int window) {
  if (window < 1) throw ConfigError("moving_average: window must be >= 1");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= static_cast<std::size_t>(window)) acc -= xs[i - window];
    const double denom =
        static_cast<double>(std::min<std::size_t>(i + 1, window));
    out[i] = acc / denom;
  }
  return out;
}

struct TrainingCurves {
  std::vector<double> final_apr, path_length, cumulative_reward;
  std::vector<double> ma_final_apr, ma_path_length, ma_cumulative_reward;
  int ma_window = 50;
};

inline TrainingCurves training_curves(const std::vector<EpisodeRecord>& history,
                                      int ma_window = 50) {
  if (history.empty()) throw ConfigError("training_curves: empty history");
  TrainingCurves c;
  c.ma_window = ma_window;
  c.final_apr.reserve(history.size());
  for (const EpisodeRecord& r : history) {
    c.final_apr.push_back(r.final_apr);
    c.path_length.push_back(static_cast<double>(r.path_length));
    c.cumulative_reward.push_back(r.cumulative_reward);
  }
  c.ma_final_apr = moving_average(c.final_apr, ma_window);
  c.ma_path_length = moving_average(c.path_length, ma_window);
  c.ma_cumulative_reward = moving_average(c.cumulative_reward, ma_window);
  return c;
}

// Left-closed bins over [0, 1): samples land in bin floor(x / width).
inline std::vector<long> initial_state_histogram(
    const std::vector<double>& samples, double bin_width) {
  if (bin_width <= 0.0) throw ConfigError("histogram: bin_width must be > 0");
  const int bins = static_cast<int>(std::ceil(1.0 / bin_width));
  std::vector<long> counts(bins, 0);
  for (double x : samples) {
    int b = static_cast<int>(std::floor(x / bin_width));
    b = std::clamp(b, 0, bins - 1);
    ++counts[b];
  }
  return counts;
}

}  // namespace alpn
