#pragma once

#include <cmath>

#include <Eigen/Core>

#include "alpn/catalog.hpp"
#include "alpn/errors.hpp"
#include "alpn/nn.hpp"
#include "alpn/rng.hpp"

namespace alpn {

// Distribution of fresh students: per-student ability g ~ N(mean, ability_std)
// plus a per-exercise offset z_j ~ N(0, exercise_std), mapped through a
// sigmoid to initial mastery m_j.
struct StudentProfile {
  double ability_mean = -0.8;
  double ability_std = 0.5;
  double exercise_std = 0.9;

  void validate() const {
    if (ability_std < 0.0 || exercise_std < 0.0) {
      throw ConfigError("profile: standard deviations must be >= 0");
    }
  }
};

struct AnalyticParams {
  double eta_correct = 0.5;  // mastery step on a correct answer
  double eta_wrong = 0.2;    // mastery step on a wrong answer
  double kappa = 0.15;       // same-topic transfer fraction
  double slip = 0.05;        // P(wrong | mastered)
  double guess = 0.10;       // P(correct | unmastered)
  StudentProfile profile{};

  void validate() const {
    auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
    if (!rate_ok(eta_correct) || !rate_ok(eta_wrong) || !rate_ok(kappa) ||
        !rate_ok(slip) || !rate_ok(guess)) {
      throw ConfigError("analytic student: rates must be in [0, 1)");
    }
    if (eta_wrong > eta_correct) {
      throw ConfigError("analytic student: eta_wrong must be <= eta_correct");
    }
    profile.validate();
  }
};

// Closed-form simulated student: latent per-exercise mastery that grows with
// practice, observed through slip/guess response noise.
class AnalyticStudent {
 public:
  AnalyticStudent() = default;
  explicit AnalyticStudent(Vector mastery) : mastery_(std::move(mastery)) {}

  static AnalyticStudent sample(int exercise_count,
                                const StudentProfile& profile,
                                RngStream& rng) {
    const double g = rng.normal(profile.ability_mean, profile.ability_std);
    Vector m(exercise_count);
    for (int j = 0; j < exercise_count; ++j) {
      const double z = rng.normal(0.0, profile.exercise_std);
      // Keep mastery inside the open interval.
      m[j] = std::clamp(sigmoid(g + z), KnowledgeState::kEpsilon,
                        1.0 - KnowledgeState::kEpsilon);
    }
    return AnalyticStudent(std::move(m));
  }

  const Vector& mastery() const { return mastery_; }

  // Observed correct-answer probabilities: s = (1 - slip) m + guess (1 - m).
  KnowledgeState observe(const AnalyticParams& p) const {
    Vector s = (1.0 - p.slip) * mastery_.array() +
               p.guess * (1.0 - mastery_.array());
    return KnowledgeState(std::move(s));
  }

  // Mastery update after answering `action`: the attempted exercise moves by
  // eta (correct or wrong rate), same-topic exercises move by kappa * eta.
  void learn(const ExerciseCatalog& catalog, int action, int correctness,
             const AnalyticParams& p) {
    const double eta = correctness == 1 ? p.eta_correct : p.eta_wrong;
    mastery_[action] += eta * (1.0 - mastery_[action]);
    if (p.kappa > 0.0) {
      const int topic = catalog.exercise(action).topic_id;
      for (const ExerciseInfo& e : catalog.exercises()) {
        if (e.topic_id == topic && e.exercise_id != action) {
          mastery_[e.exercise_id] +=
              p.kappa * eta * (1.0 - mastery_[e.exercise_id]);
        }
      }
    }
  }

 private:
  Vector mastery_;
};

}  // namespace alpn
