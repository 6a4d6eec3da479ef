#include <gtest/gtest.h>

#include <cmath>

#include "alpn/akt.hpp"
#include "alpn/logs_io.hpp"
#include "test_util.hpp"

namespace alpn {
namespace {

AktLiteModel make_model(int exercises, int d, std::uint64_t seed,
                        int window = 128) {
  RngStream rng(seed, streams::kNetInit);
  return AktLiteModel(exercises, d, rng, window);
}

InteractionLog random_log(int exercises, int length, RngStream& rng) {
  InteractionLog log;
  for (int i = 0; i < length; ++i) {
    log.append(static_cast<int>(rng.uniform_int(exercises)),
               rng.bernoulli(0.5) ? 1 : 0);
  }
  return log;
}

TEST(AktPredict, EmptyLogGivesDeterministicPrior) {
  const AktLiteModel model = make_model(10, 8, 1);
  const InteractionLog empty;
  const KnowledgeState a = model.predict_state(empty);
  const KnowledgeState b = model.predict_state(empty);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.size(), 10);
}

TEST(AktPredict, PureFunctionOfLog) {
  const AktLiteModel model = make_model(12, 8, 2);
  RngStream rng(3, 0);
  const InteractionLog log = random_log(12, 9, rng);
  InteractionLog copy;
  for (const auto& e : log.entries) copy.append(e.exercise_id, e.correctness);
  EXPECT_TRUE(model.predict_state(log) == model.predict_state(copy));
}

TEST(AktPredict, OutputsAreProbabilitiesOfCatalogLength) {
  const AktLiteModel model = make_model(15, 8, 4);
  RngStream rng(5, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const InteractionLog log = random_log(15, trial, rng);
    const KnowledgeState s = model.predict_state(log);
    ASSERT_EQ(s.size(), 15);
    for (int j = 0; j < 15; ++j) {
      EXPECT_GT(s[j], 0.0);
      EXPECT_LT(s[j], 1.0);
    }
  }
}

TEST(AktPredict, RejectsForeignExerciseIds) {
  const AktLiteModel model = make_model(5, 4, 6);
  InteractionLog log;
  log.append(7, 1);
  EXPECT_THROW(model.predict_state(log), DataError);
}

TEST(AktPredict, WindowKeepsMostRecentEntries) {
  const AktLiteModel model = make_model(6, 4, 7, /*window=*/8);
  RngStream rng(8, 0);
  InteractionLog longlog = random_log(6, 40, rng);
  InteractionLog tail;
  for (std::size_t i = longlog.size() - 8; i < longlog.size(); ++i) {
    tail.append(longlog.entries[i].exercise_id, longlog.entries[i].correctness);
  }
  EXPECT_TRUE(model.predict_state(longlog) == model.predict_state(tail));
}

TEST(AktCausality, PerturbingEntryNeverChangesEarlierPredictions) {
  const AktLiteModel model = make_model(10, 8, 9);
  RngStream rng(10, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int len = 2 + static_cast<int>(rng.uniform_int(12));
    const InteractionLog log = random_log(10, len, rng);
    const Vector base = model.next_response_logits(log);
    const int t = static_cast<int>(rng.uniform_int(len));

    // Flipping the response at t must leave predictions at positions <= t
    // untouched: position t is predicted from entries strictly before t.
    InteractionLog flipped;
    for (int i = 0; i < len; ++i) {
      const auto& e = log.entries[i];
      flipped.append(e.exercise_id,
                     i == t ? 1 - e.correctness : e.correctness);
    }
    const Vector moved = model.next_response_logits(flipped);
    for (int i = 0; i <= t; ++i) {
      ASSERT_DOUBLE_EQ(base[i], moved[i])
          << "prediction " << i << " changed by a response flip at " << t;
    }

    // Swapping the exercise at t changes the query of prediction t itself,
    // so only the strictly earlier predictions must be stable.
    InteractionLog swapped;
    for (int i = 0; i < len; ++i) {
      const auto& e = log.entries[i];
      const int ex = i == t ? (e.exercise_id + 1 +
                               static_cast<int>(rng.uniform_int(9))) % 10
                            : e.exercise_id;
      swapped.append(ex, e.correctness);
    }
    const Vector requeried = model.next_response_logits(swapped);
    for (int i = 0; i < t; ++i) {
      ASSERT_DOUBLE_EQ(base[i], requeried[i])
          << "prediction " << i << " changed by an exercise swap at " << t;
    }
  }
}

TEST(AktGradient, FullModelMatchesFiniteDifferences) {
  AktLiteModel model = make_model(5, 4, 11);
  RngStream rng(12, 0);
  std::vector<InteractionLog> logs;
  for (int i = 0; i < 3; ++i) logs.push_back(random_log(5, 4 + i, rng));
  auto loss = [&]() { return model.loss(logs); };
  auto fill = [&]() { model.loss_and_grad(logs); };
  const auto res =
      test::check_gradients(model.params(), loss, fill, 1e-3, 1e-5);
  EXPECT_TRUE(res.ok) << "worst " << res.worst_name << " analytic "
                      << res.analytic << " numeric " << res.numeric
                      << " rel " << res.worst_rel;
}

TEST(AktTrain, ZeroEpochsReportLossOnceAndKeepModel) {
  AktLiteModel model = make_model(6, 4, 13);
  const AktLiteModel before = model;
  InteractionLog log;
  log.append(2, 1);
  const std::vector<double> curve =
      train_akt(model, {log}, AktHyper{1e-2, 0, 4}, 99);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_TRUE(std::isfinite(curve[0]));
  auto a = model.params();
  auto b = const_cast<AktLiteModel&>(before).params();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i]->value == b[i]->value);
  }
}

TEST(AktTrain, EmptyCollectionIsConfigError) {
  AktLiteModel model = make_model(6, 4, 14);
  EXPECT_THROW(train_akt(model, {}, AktHyper{}, 1), ConfigError);
  InteractionLog empty;
  EXPECT_THROW(train_akt(model, {empty}, AktHyper{}, 1), ConfigError);
}

TEST(AktTrain, LearnsAlwaysCorrectStudents) {
  AktLiteModel model = make_model(8, 8, 15);
  RngStream rng(16, 0);
  std::vector<InteractionLog> logs;
  for (int i = 0; i < 40; ++i) {
    InteractionLog log;
    for (int t = 0; t < 6; ++t) {
      log.append(static_cast<int>(rng.uniform_int(8)), 1);
    }
    logs.push_back(std::move(log));
  }
  const std::vector<double> curve =
      train_akt(model, logs, AktHyper{1e-2, 200, 8}, 7);
  ASSERT_EQ(curve.size(), 201u);
  for (double v : curve) EXPECT_TRUE(std::isfinite(v));
  EXPECT_LE(curve.back(), curve.front());
  double mean_pred = 0.0;
  int count = 0;
  for (const InteractionLog& log : logs) {
    const Vector logits = model.next_response_logits(log);
    for (Eigen::Index t = 0; t < logits.size(); ++t) {
      mean_pred += sigmoid(logits[t]);
      ++count;
    }
  }
  EXPECT_GT(mean_pred / count, 0.5);
}

TEST(AktTrain, PracticedExerciseBeatsEmptyLogPrior) {
  // Half the students answer exercise 3 correctly every time, half never do;
  // other exercises get coin-flip responses. The history is then informative
  // beyond the marginal: a held-out log with (3, correct) must push s_3 above
  // the empty-log prior, and (3, wrong) below it.
  const int target = 3;
  AktLiteModel model = make_model(8, 8, 17);
  RngStream rng(18, 0);
  std::vector<InteractionLog> logs;
  for (int i = 0; i < 100; ++i) {
    const bool strong = i % 2 == 0;
    InteractionLog log;
    for (int t = 0; t < 8; ++t) {
      const int e = static_cast<int>(rng.uniform_int(8));
      const int c =
          e == target ? (strong ? 1 : 0) : (rng.bernoulli(0.5) ? 1 : 0);
      log.append(e, c);
    }
    logs.push_back(std::move(log));
  }
  train_akt(model, logs, AktHyper{1e-2, 200, 16}, 19);
  const double prior = model.predict_state(InteractionLog{})[target];
  InteractionLog held_correct;
  held_correct.append(target, 1);
  InteractionLog held_wrong;
  held_wrong.append(target, 0);
  EXPECT_GT(model.predict_state(held_correct)[target], prior);
  EXPECT_LT(model.predict_state(held_wrong)[target], prior);
}

}  // namespace
}  // namespace alpn
