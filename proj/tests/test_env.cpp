#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "alpn/env.hpp"
#include "alpn/rng.hpp"
#include "test_util.hpp"

namespace alpn {
namespace {

Environment make_env(AnalyticParams params = {}, GoalConfig goal = {0.8, 100},
                     int exercises = 20) {
  auto catalog =
      std::make_shared<const ExerciseCatalog>(make_catalog(exercises, 10, 7));
  EnvConfig cfg;
  cfg.analytic = params;
  return Environment(std::move(catalog), cfg, goal);
}

// E[sigmoid(mu + sigma Z)] by direct quadrature; independent of the sampler.
double expected_sigmoid_of_normal(double mu, double sigma) {
  const int n = 20001;
  const double lo = -10.0, hi = 10.0;
  const double h = (hi - lo) / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = lo + h * i;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
    acc += w * sigmoid(mu + sigma * t) * phi;
  }
  return acc * h;
}

TEST(EnvReset, SameSeedGivesIdenticalInitialState) {
  const Environment env = make_env();
  RngStream r1(9, 3), r2(9, 3);
  const Episode a = env.reset(r1);
  const Episode b = env.reset(r2);
  EXPECT_TRUE(a.state() == b.state());
}

TEST(EnvReset, NoiseFreeMidpointProfileGivesHalfEverywhere) {
  AnalyticParams p;
  p.slip = 0.0;
  p.guess = 0.0;
  p.profile = StudentProfile{0.0, 0.0, 0.0};  // sigmoid(0) = 0.5 mastery
  const Environment env = make_env(p);
  RngStream rng(1, 0);
  const Episode ep = env.reset(rng);
  for (int j = 0; j < 20; ++j) EXPECT_DOUBLE_EQ(ep.state()[j], 0.5);
}

TEST(EnvReset, MeanInitialAprMatchesProfileQuadrature) {
  const AnalyticParams p{};
  const Environment env = make_env(p);
  const double sigma = std::hypot(p.profile.ability_std,
                                  p.profile.exercise_std);
  const double m_mean =
      expected_sigmoid_of_normal(p.profile.ability_mean, sigma);
  const double expected = (1.0 - p.slip) * m_mean + p.guess * (1.0 - m_mean);
  double acc = 0.0;
  const int n = 3000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(77, static_cast<std::uint64_t>(i));
    acc += env.reset(rng).initial_apr();
  }
  EXPECT_NEAR(acc / n, expected, 0.05);
}

TEST(EnvRespond, NearCertainStateAnswersCorrectly) {
  AnalyticParams p;
  p.slip = 0.0;
  p.guess = 0.0;
  p.profile = StudentProfile{40.0, 0.0, 0.0};  // mastery ~ 1 - eps
  const Environment env = make_env(p);
  RngStream rng(5, 0);
  const Episode ep = env.reset(rng);
  int correct = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) correct += ep.respond(3, rng);
  EXPECT_NEAR(correct / double(n), 1.0, 0.01);
}

TEST(EnvRespond, HalfStateIsFairCoin) {
  AnalyticParams p;
  p.slip = 0.0;
  p.guess = 0.0;
  p.profile = StudentProfile{0.0, 0.0, 0.0};
  const Environment env = make_env(p);
  RngStream rng(6, 0);
  const Episode ep = env.reset(rng);
  int correct = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) correct += ep.respond(3, rng);
  EXPECT_NEAR(correct / double(n), 0.5, 0.02);
}

TEST(EnvRespond, FixedSeedReproducesCorrectnessSequence) {
  const Environment env = make_env();
  RngStream r1(11, 2), r2(11, 2);
  Episode a = env.reset(r1);
  Episode b = env.reset(r2);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(a.respond(i % 20, r1), b.respond(i % 20, r2));
  }
}

TEST(EnvRespond, RejectsOutOfRangeAction) {
  const Environment env = make_env();
  RngStream rng(1, 1);
  const Episode ep = env.reset(rng);
  EXPECT_THROW(ep.respond(20, rng), UsageError);
  EXPECT_THROW(ep.respond(-1, rng), UsageError);
}

TEST(EnvTransition, CorrectAnswerAppliesLearningRate) {
  AnalyticParams p;
  p.eta_correct = 0.2;
  p.eta_wrong = 0.0;
  p.kappa = 0.0;
  p.slip = 0.0;
  p.guess = 0.0;
  p.profile = StudentProfile{0.0, 0.0, 0.0};  // mastery 0.5
  const Environment env = make_env(p);
  RngStream rng(2, 0);
  Episode ep = env.reset(rng);
  const KnowledgeState& s = ep.transition(4, 1);
  EXPECT_NEAR(s[4], 0.6, 1e-12);  // 0.5 + 0.2 * (1 - 0.5)
  for (int j = 0; j < 20; ++j) {
    if (j != 4) EXPECT_DOUBLE_EQ(s[j], 0.5);  // kappa = 0, no transfer
  }
}

TEST(EnvTransition, ZeroWrongRateLeavesStateUnchanged) {
  AnalyticParams p;
  p.eta_correct = 0.3;
  p.eta_wrong = 0.0;
  p.kappa = 0.0;
  const Environment env = make_env(p);
  RngStream rng(3, 0);
  Episode ep = env.reset(rng);
  const KnowledgeState before = ep.state();
  ep.transition(7, 0);
  EXPECT_TRUE(ep.state() == before);
}

TEST(EnvTransition, SameTopicTransferLiftsSiblings) {
  AnalyticParams p;
  p.eta_correct = 0.4;
  p.kappa = 0.5;
  p.slip = 0.0;
  p.guess = 0.0;
  p.profile = StudentProfile{0.0, 0.0, 0.0};
  const Environment env = make_env(p);
  RngStream rng(4, 0);
  Episode ep = env.reset(rng);
  // Exercise 0 and 10 share topic 0 in the synthesized 20/10 catalog.
  const KnowledgeState& s = ep.transition(0, 1);
  EXPECT_NEAR(s[0], 0.5 + 0.4 * 0.5, 1e-12);
  EXPECT_NEAR(s[10], 0.5 + 0.5 * 0.4 * 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
}

TEST(EnvTransition, SnapshotReplayIsBitIdentical) {
  const Environment env = make_env();
  RngStream rng(12, 5);
  Episode ep = env.reset(rng);
  for (int i = 0; i < 10; ++i) {
    const Episode snapshot = ep;
    Episode replay = snapshot;
    Episode replay2 = snapshot;
    const int action = i % 20;
    const int correctness = i % 2;
    const KnowledgeState& s1 = replay.transition(action, correctness);
    const KnowledgeState& s2 = replay2.transition(action, correctness);
    EXPECT_TRUE(s1 == s2);
    ep.transition(action, correctness);
    EXPECT_TRUE(ep.state() == s1);
  }
}

TEST(EnvStep, ReachingBetaExactlyEndsEpisode) {
  // One exercise, beta exactly reachable: s jumps 0.5 -> 0.8 on a correct
  // answer with eta = 0.6 and no noise.
  AnalyticParams p;
  p.eta_correct = 0.6;
  p.eta_wrong = 0.0;
  p.kappa = 0.0;
  p.slip = 0.0;
  p.guess = 0.0;
  p.profile = StudentProfile{0.0, 0.0, 0.0};
  auto catalog = std::make_shared<const ExerciseCatalog>(make_catalog(1, 1, 1));
  Environment env(catalog, EnvConfig{EnvBacking::kAnalytic, p}, GoalConfig{0.8, 50});
  RngStream rng(40, 0);  // mastery 0.5; a correct response is within reach
  Episode ep = env.reset(rng);
  // Force the correct response by stepping until one lands correct.
  EnvStep step;
  while (true) {
    step = ep.step(0, rng);
    if (step.correctness == 1) break;
  }
  EXPECT_NEAR(step.info.apr_now, 0.8, 1e-12);
  EXPECT_TRUE(step.done);
  EXPECT_FALSE(step.info.truncated);
  EXPECT_THROW(ep.step(0, rng), UsageError);
}

TEST(EnvStep, TruncatesAtMaxLength) {
  AnalyticParams p;
  p.eta_correct = 0.0;  // nothing ever improves
  p.eta_wrong = 0.0;
  p.kappa = 0.0;
  const Environment env = make_env(p, GoalConfig{0.8, 12});
  RngStream rng(41, 0);
  Episode ep = env.reset(rng);
  EnvStep last;
  int steps = 0;
  while (!ep.done()) {
    last = ep.step(steps % 20, rng);
    ++steps;
  }
  EXPECT_EQ(steps, 12);
  EXPECT_TRUE(last.info.truncated);
  EXPECT_TRUE(ep.truncated());
}

TEST(EnvStep, FrozenDynamicsKeepAprConstant) {
  AnalyticParams p;
  p.eta_correct = 0.0;
  p.eta_wrong = 0.0;
  p.kappa = 0.0;
  const Environment env = make_env(p, GoalConfig{0.8, 30});
  RngStream rng(42, 0);
  Episode ep = env.reset(rng);
  const double apr1 = ep.initial_apr();
  while (!ep.done()) {
    const EnvStep s = ep.step(3, rng);
    EXPECT_NEAR(s.info.apr_now, apr1, 1e-12);
    EXPECT_NEAR(s.info.lg, 0.0, 1e-12);
  }
}

TEST(EnvStep, AllCorrectAnswersGiveMonotoneApr) {
  AnalyticParams p;
  p.slip = 0.0;
  p.guess = 0.0;
  const Environment env = make_env(p);
  RngStream rng(43, 0);
  Episode ep = env.reset(rng);
  double prev = ep.initial_apr();
  for (int t = 0; t < 60 && !ep.done(); ++t) {
    ep.transition(t % 20, 1);  // forced correct
    const double now = ep.apr_now();
    EXPECT_GE(now, prev - 1e-15);
    prev = now;
  }
}

TEST(EnvStep, RewardUsesPostTransitionAprAndCounts) {
  AnalyticParams p;
  p.eta_correct = 0.2;
  p.eta_wrong = 0.2;
  p.kappa = 0.0;
  p.slip = 0.0;
  p.guess = 0.0;
  p.profile = StudentProfile{0.0, 0.0, 0.0};
  const Environment env = make_env(p, GoalConfig{0.9, 100});
  RngStream rng(44, 0);
  Episode ep = env.reset(rng);
  const double apr1 = ep.initial_apr();
  const double lambda = ep.lambda();
  EXPECT_DOUBLE_EQ(lambda, (0.9 - apr1) * 20.0 / 100.0);
  const EnvStep s = ep.step(5, rng);
  // Post-transition mastery of exercise 5: 0.5 + 0.2 * 0.5 = 0.6 either way
  // since both rates are equal and noise is off.
  const double apr_now = (19 * 0.5 + 0.6) / 20.0;
  EXPECT_NEAR(s.info.apr_now, apr_now, 1e-12);
  EXPECT_NEAR(s.info.lg, apr_now - apr1, 1e-12);
  EXPECT_NEAR(s.info.d, 0.9 - apr_now, 1e-12);
  EXPECT_EQ(s.info.n_action, 1);
  const double expected_reward =
      (apr_now - apr1) * 20.0 / (0.9 - apr_now) - lambda;
  EXPECT_NEAR(s.reward, expected_reward, 1e-12);
}

TEST(EnvInvariants, RandomEpisodesRespectContracts) {
  const Environment env = make_env();
  for (int e = 0; e < 200; ++e) {
    RngStream rng(1000, static_cast<std::uint64_t>(e));
    Episode ep = env.reset(rng);
    int steps = 0;
    while (!ep.done()) {
      const int a = static_cast<int>(rng.uniform_int(20));
      const EnvStep s = ep.step(a, rng);
      ++steps;
      ASSERT_LE(steps, 100);
      for (int j = 0; j < 20; ++j) {
        ASSERT_GT(s.next_state[j], 0.0);
        ASSERT_LT(s.next_state[j], 1.0);
      }
      if (s.done) {
        ASSERT_TRUE(goal_reached(s.info.apr_now, 0.8) || steps == 100);
      } else {
        ASSERT_FALSE(goal_reached(s.info.apr_now, 0.8));
      }
    }
  }
}

// Golden regression fixture: a full episode under a pinned seed and a
// stream-driven random policy. Regenerate with --gtest_also_run_disabled_tests
// --gtest_filter='*GoldenEpisodeFixture*' after any intentional change to the
// environment dynamics or the rng.
constexpr const char* kGoldenPath = ALPN_TEST_DATA_DIR "/golden_episode.tsv";
constexpr std::uint64_t kGoldenSeed = 424242;

std::string render_golden_episode() {
  const Environment env = make_env();
  RngStream rng(kGoldenSeed, 0);
  Episode ep = env.reset(rng);
  std::ostringstream out;
  out << "t\taction\tcorrectness\treward\tapr\tdone\n";
  while (!ep.done()) {
    const int a = static_cast<int>(rng.uniform_int(20));
    const EnvStep s = ep.step(a, rng);
    char reward[40], apr_buf[40];
    std::snprintf(reward, sizeof(reward), "%.17g", s.reward);
    std::snprintf(apr_buf, sizeof(apr_buf), "%.17g", s.info.apr_now);
    out << ep.steps() << '\t' << a << '\t' << s.correctness << '\t' << reward
        << '\t' << apr_buf << '\t' << (s.done ? 1 : 0) << '\n';
  }
  return out.str();
}

TEST(EnvGolden, DISABLED_GoldenEpisodeFixtureWriter) {
  std::ofstream out(kGoldenPath);
  ASSERT_TRUE(out) << "cannot write " << kGoldenPath;
  out << render_golden_episode();
}

TEST(EnvGolden, FixedSeedReproducesGoldenTrajectory) {
  std::ifstream in(kGoldenPath);
  ASSERT_TRUE(in) << "missing fixture " << kGoldenPath;
  std::ostringstream stored;
  stored << in.rdbuf();
  EXPECT_EQ(render_golden_episode(), stored.str());
}

TEST(AktBacking, ResetSeedsHistoryAndPredicts) {
  RngStream init(3, streams::kNetInit);
  auto model = std::make_shared<const AktLiteModel>(
      AktLiteModel(20, 8, init, 64));
  auto catalog = std::make_shared<const ExerciseCatalog>(make_catalog(20, 10, 7));
  EnvConfig cfg;
  cfg.backing = EnvBacking::kAkt;
  cfg.akt = model;
  cfg.seed_history_length = 6;
  const Environment env(catalog, cfg, GoalConfig{0.8, 40});
  RngStream r1(21, 0), r2(21, 0);
  Episode a = env.reset(r1);
  Episode b = env.reset(r2);
  EXPECT_EQ(a.log().size(), 6u);
  EXPECT_TRUE(a.state() == b.state());
  // Transitions recompute the model prediction on the grown log.
  const KnowledgeState s1 = a.transition(4, 1);
  EXPECT_EQ(a.log().size(), 7u);
  const KnowledgeState expected = model->predict_state(a.log());
  EXPECT_TRUE(s1 == expected);
}

}  // namespace
}  // namespace alpn
