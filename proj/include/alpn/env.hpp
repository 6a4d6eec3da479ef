#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "alpn/akt.hpp"
#include "alpn/catalog.hpp"
#include "alpn/errors.hpp"
#include "alpn/reward.hpp"
#include "alpn/rng.hpp"
#include "alpn/student.hpp"

namespace alpn {

enum class EnvBacking { kAnalytic, kAkt };

struct EnvConfig {
  EnvBacking backing = EnvBacking::kAnalytic;
  AnalyticParams analytic{};
  // AKT backing: a short history generated by the analytic student seeds the
  // model's initial state estimate.
  int seed_history_length = 10;
  std::shared_ptr<const AktLiteModel> akt;
  double d_floor = 0.05;

  void validate() const {
    analytic.validate();
    if (seed_history_length < 0) {
      throw ConfigError("environment.seed_history_length must be >= 0");
    }
    if (backing == EnvBacking::kAkt && !akt) {
      throw ConfigError("environment: akt backing requires a loaded model");
    }
    if (d_floor <= 0.0) throw ConfigError("environment.d_floor must be > 0");
  }
};

struct StepInfo {
  double apr_now = 0.0;
  double lg = 0.0;
  double d = 0.0;
  double d_used = 0.0;
  double lambda = 0.0;
  double penalty = 0.0;
  int n_action = 0;
  bool penalty_applied = false;
  bool truncated = false;  // ended by the length bound, not the goal
};

struct EnvStep {
  int correctness = 0;
  KnowledgeState next_state;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// One student's goal-directed session. Value type: a copy is a snapshot that
// replays identically. All randomness is drawn from caller-provided streams.
class Episode {
 public:
  const KnowledgeState& state() const { return state_; }
  double apr_now() const { return apr(state_); }
  double initial_apr() const { return apr1_; }
  double lambda() const { return reward_params_.lambda; }
  int steps() const { return t_; }
  bool done() const { return done_; }
  bool truncated() const { return truncated_; }
  const InteractionLog& log() const { return log_; }
  const RecommendationCounts& counts() const { return counts_; }
  const GoalConfig& goal() const { return goal_; }
  const ExerciseCatalog& catalog() const { return *catalog_; }

  // Draws the student's response to `action` from the current state.
  int respond(int action, RngStream& rng) const {
    check_action(action);
    return rng.bernoulli(state_[action]) ? 1 : 0;
  }

  // Deterministic state update for a given (action, correctness) pair.
  const KnowledgeState& transition(int action, int correctness) {
    check_action(action);
    log_.append(action, correctness);
    if (backing_ == EnvBacking::kAnalytic) {
      student_.learn(*catalog_, action, correctness, analytic_);
      state_ = student_.observe(analytic_);
    } else {
      state_ = akt_->predict_state(log_);
    }
    return state_;
  }

  // Full environment step: respond, transition, reward, termination check.
  EnvStep step(int action, RngStream& rng) {
    if (done_) {
      throw UsageError("episode: step() called on a finished episode");
    }
    EnvStep out;
    out.correctness = respond(action, rng);
    transition(action, out.correctness);
    const int n_action = counts_.bump(action);
    const double apr_now = apr(state_);
    const double lg = learning_gain(apr_now, apr_prev_);
    const double d = distance_to_goal(goal_.beta, apr_now);
    const RewardBreakdown rb =
        step_reward_detailed(lg, d, reward_params_, n_action);
    ++t_;
    const bool goal = goal_reached(apr_now, goal_.beta);
    done_ = goal || t_ >= goal_.t_max;
    truncated_ = done_ && !goal;
    apr_prev_ = apr_now;
    out.next_state = state_;
    out.reward = rb.reward;
    out.done = done_;
    out.info = StepInfo{apr_now,    lg,
                        d,          rb.d_used,
                        reward_params_.lambda, rb.penalty,
                        n_action,   rb.penalty_applied,
                        truncated_};
    return out;
  }

 private:
  friend class Environment;

  void check_action(int action) const {
    if (action < 0 || action >= catalog_->size()) {
      throw UsageError("episode: action " + std::to_string(action) +
                       " outside the catalog of " +
                       std::to_string(catalog_->size()) + " exercises");
    }
  }

  std::shared_ptr<const ExerciseCatalog> catalog_;
  EnvBacking backing_ = EnvBacking::kAnalytic;
  AnalyticParams analytic_{};
  std::shared_ptr<const AktLiteModel> akt_;
  AnalyticStudent student_;
  InteractionLog log_;
  KnowledgeState state_;
  GoalConfig goal_{};
  RewardParams reward_params_{};
  RecommendationCounts counts_;
  double apr_prev_ = 0.0;
  double apr1_ = 0.0;
  int t_ = 0;
  bool done_ = false;
  bool truncated_ = false;
};

// Immutable episode factory shared across rollouts.
class Environment {
 public:
  Environment(std::shared_ptr<const ExerciseCatalog> catalog, EnvConfig config,
              GoalConfig goal)
      : catalog_(std::move(catalog)), config_(std::move(config)), goal_(goal) {
    if (!catalog_) throw ConfigError("environment: catalog is required");
    config_.validate();
    goal_.validate();
    if (config_.backing == EnvBacking::kAkt &&
        config_.akt->exercise_count() != catalog_->size()) {
      throw CatalogMismatchError(
          "environment: akt model covers " +
          std::to_string(config_.akt->exercise_count()) +
          " exercises but the catalog has " + std::to_string(catalog_->size()));
    }
  }

  const ExerciseCatalog& catalog() const { return *catalog_; }
  std::shared_ptr<const ExerciseCatalog> catalog_ptr() const {
    return catalog_;
  }
  const GoalConfig& goal() const { return goal_; }
  const EnvConfig& config() const { return config_; }
  int action_count() const { return catalog_->size(); }

  // Samples a fresh student and produces its initial knowledge state.
  Episode reset(RngStream& rng) const {
    Episode ep;
    ep.catalog_ = catalog_;
    ep.backing_ = config_.backing;
    ep.analytic_ = config_.analytic;
    ep.akt_ = config_.akt;
    ep.goal_ = goal_;
    ep.counts_ = RecommendationCounts(catalog_->size());
    ep.student_ = AnalyticStudent::sample(catalog_->size(),
                                          config_.analytic.profile, rng);
    if (config_.backing == EnvBacking::kAnalytic) {
      ep.state_ = ep.student_.observe(config_.analytic);
    } else {
      for (int i = 0; i < config_.seed_history_length; ++i) {
        const int a =
            static_cast<int>(rng.uniform_int(catalog_->size()));
        const KnowledgeState s = ep.student_.observe(config_.analytic);
        const int c = rng.bernoulli(s[a]) ? 1 : 0;
        ep.student_.learn(*catalog_, a, c, config_.analytic);
        ep.log_.append(a, c);
      }
      ep.state_ = config_.akt->predict_state(ep.log_);
    }
    ep.apr1_ = apr(ep.state_);
    ep.apr_prev_ = ep.apr1_;
    const double d1 = distance_to_goal(goal_.beta, ep.apr1_);
    ep.reward_params_ =
        RewardParams{penalty_lambda(d1, catalog_->size(), goal_.t_max),
                     catalog_->size(), config_.d_floor};
    ep.done_ = goal_reached(ep.apr1_, goal_.beta);
    return ep;
  }

 private:
  std::shared_ptr<const ExerciseCatalog> catalog_;
  EnvConfig config_;
  GoalConfig goal_;
};

}  // namespace alpn
