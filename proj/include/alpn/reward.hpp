#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "alpn/errors.hpp"

namespace alpn {

// Repetition-penalty base: initial goal distance times the action-space size
// over the maximum path length. d1 is floored at zero so students starting at
// or past the goal pay no penalty.
inline double penalty_lambda(double d1, int action_count, int t_max) {
  if (t_max < 1) throw ConfigError("penalty_lambda: t_max must be >= 1");
  d1 = std::max(d1, 0.0);
  return d1 * static_cast<double>(action_count) / static_cast<double>(t_max);
}

struct RewardParams {
  double lambda = 0.0;   // repetition-penalty base, >= 0 (not clamped at 1)
  int action_count = 1;  // |A|, the number of available exercises
  double d_floor = 1e-3; // minimum distance used as divisor

  void validate() const {
    if (lambda < 0.0) throw ConfigError("reward.lambda must be >= 0");
    if (action_count < 1) throw ConfigError("reward.action_count must be >= 1");
    if (d_floor <= 0.0) throw ConfigError("reward.d_floor must be > 0");
  }
};

struct RewardBreakdown {
  double reward = 0.0;
  double lg = 0.0;       // learning gain used
  double d = 0.0;        // raw distance to goal
  double d_used = 0.0;   // max(d, d_floor), the divisor actually applied
  double penalty = 0.0;  // lambda^n when applied, else 0
  int n_action = 0;      // recommendation count including the current one
  bool penalty_applied = false;
};

// Learning gain scaled by the inverse distance to the goal, minus an
// exponentiated repetition penalty on the nonnegative-gain branch. The
// distance divisor is floored so the reward stays finite and keeps its sign
// once the goal is crossed.
inline RewardBreakdown step_reward_detailed(double lg, double d,
                                            const RewardParams& params,
                                            int n_action) {
  if (n_action < 1) {
    throw ConfigError("step_reward: n_action must count the current "
                      "recommendation (>= 1)");
  }
  RewardBreakdown out;
  out.lg = lg;
  out.d = d;
  out.d_used = std::max(d, params.d_floor);
  out.n_action = n_action;
  const double core = lg * static_cast<double>(params.action_count) / out.d_used;
  if (lg >= 0.0) {
    out.penalty = std::pow(params.lambda, n_action);
    out.penalty_applied = true;
    out.reward = core - out.penalty;
  } else {
    out.reward = core;
  }
  return out;
}

inline double step_reward(double lg, double d, const RewardParams& params,
                          int n_action) {
  return step_reward_detailed(lg, d, params, n_action).reward;
}

// Per-episode recommendation counts, reset to zero at episode start.
struct RecommendationCounts {
  std::vector<int> n;

  explicit RecommendationCounts(int action_count = 0) : n(action_count, 0) {}
  void reset() { std::fill(n.begin(), n.end(), 0); }
  // Returns the count including the current recommendation.
  int bump(int action) { return ++n[action]; }
  int count(int action) const { return n[action]; }
};

}  // namespace alpn
