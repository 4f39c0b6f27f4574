#include "analysis.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace thumbtrak;
using test_support::small_study;

namespace {

// Synthetic users whose poses read as well-separated constant vectors plus
// Gaussian noise. S9 never sees a target and S8 mirrors S7.
struct Synthetic {
  double noise_mm = 1.0;

  std::array<double, kSensorCount> signature(Pose p) const {
    std::array<double, kSensorCount> v{};
    if (p == Pose::NoPose) {
      v.fill(kNoTarget);
      return v;
    }
    const int k = static_cast<int>(index_of(p));
    for (int s = 0; s < 7; ++s)
      v[s] = 10.0 + 8.0 * ((k * (s + 2) + s) % 13);
    v[7] = v[6];
    v[8] = kNoTarget;
    return v;
  }

  std::array<double, kSensorCount> reading(Pose p, Rng &rng) const {
    auto v = signature(p);
    for (std::size_t s = 0; s < kSensorCount; ++s)
      if (v[s] != kNoTarget)
        v[s] = std::max(0.0, v[s] + rng.normal(0.0, noise_mm));
    v[7] = p == Pose::NoPose ? kNoTarget : v[6];
    return v;
  }

  // Each segment holds `pose` for `ms` at 10 Hz.
  void append(Session &s, Pose pose, int ms, bool record_last_second, Rng &rng) const {
    const std::int64_t start = s.records.empty() ? 0 : s.records.back().t_ms + 100;
    for (std::int64_t t = start; t < start + ms; t += 100) {
      DatasetRecord r;
      r.t_ms = t;
      r.raw = reading(pose, rng);
      r.label = pose;
      r.session_id = s.session_id;
      r.user_id = s.user_id;
      r.phase = s.phase;
      r.recorded = record_last_second && t >= start + ms - 1000;
      s.records.push_back(r);
    }
  }

  Session training(const std::string &user, const std::string &id, Rng &rng) const {
    Session s{user, id, Phase::Train};
    for (int rep = 0; rep < 5; ++rep)
      for (Pose p : kAllLabels) {
        const std::int64_t start = s.records.empty() ? 0 : s.records.back().t_ms + 100;
        append(s, p, 4000, true, rng);
        s.prompts.push_back({p, start, start + 4000});
      }
    return s;
  }

  Session testing(const std::string &user, const std::string &id, Condition c, Rng &rng) const {
    Session s{user, id, Phase::Test, c};
    for (int rep = 0; rep < 5; ++rep)
      for (Pose p : kAllPoses) {
        const std::int64_t start = s.records.empty() ? 0 : s.records.back().t_ms + 100;
        append(s, Pose::NoPose, 800, false, rng);
        append(s, p, 3200, false, rng);
        append(s, Pose::NoPose, 2000, false, rng);
        s.prompts.push_back({p, start, start + 6000});
      }
    return s;
  }

  std::vector<UserData> users(int n, std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<Session> all;
    for (int u = 0; u < n; ++u) {
      const std::string id = "U" + std::to_string(u);
      for (int k = 1; k <= 3; ++k)
        all.push_back(training(id, "train-" + std::to_string(k), rng));
      for (int k = 1; k <= 2; ++k) {
        all.push_back(testing(id, "test-" + std::to_string(k), Condition::InSession, rng));
        all.push_back(testing(id, "cal-" + std::to_string(k), Condition::Calibrated, rng));
      }
    }
    return group_by_user(std::move(all));
  }
};

const std::vector<UserData> &synthetic() {
  static const auto users = Synthetic{}.users(2, 3);
  return users;
}

const Evaluation &study_baseline() {
  static const Evaluation e = evaluate(small_study());
  return e;
}

} // namespace

TEST(Confusion, CountsAndAccuracy) {
  ConfusionMatrix m;
  m.add(Pose::IndexDistal, Pose::IndexDistal);
  m.add(Pose::IndexDistal, Pose::RingMiddle);
  m.add(Pose::RingMiddle, std::nullopt);
  m.add(Pose::RingMiddle, Pose::RingMiddle);
  EXPECT_EQ(m.total(), 4);
  EXPECT_EQ(m.correct(), 2);
  EXPECT_EQ(m.missed(), 1);
  EXPECT_DOUBLE_EQ(m.accuracy(), 0.5);
  EXPECT_EQ(m.count(Pose::IndexDistal, Pose::RingMiddle), 1);
  EXPECT_EQ(m.no_emission(Pose::RingMiddle), 1);
  EXPECT_EQ(m.row_total(Pose::RingMiddle), 2);
  EXPECT_DOUBLE_EQ(m.class_accuracy(Pose::IndexDistal), 0.5);
  EXPECT_DOUBLE_EQ(m.phalanx_accuracy(Phalanx::Middle), 0.5);

  ConfusionMatrix n;
  n.merge(m);
  n.merge(m);
  EXPECT_EQ(n.total(), 8);
  EXPECT_EQ(n.correct(), 4);
  EXPECT_THROW(m.add(Pose::NoPose, Pose::IndexDistal), Error);
  ConfusionMatrix small({Pose::IndexDistal, Pose::IndexMiddle});
  EXPECT_THROW(small.add(Pose::RingDistal, std::nullopt), Error);
  EXPECT_EQ(ConfusionMatrix().accuracy(), 0.0);
}

TEST(Confusion, CsvShape) {
  const auto csv = confusion_csv(study_baseline().matrix);
  std::istringstream in(csv);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("true,index-distal,", 0), 0u);
  while (std::getline(in, line))
    ++rows;
  EXPECT_EQ(rows, 12);
  const auto outcomes = outcomes_csv(study_baseline().outcomes);
  EXPECT_EQ(outcomes.rfind("user_id,session_id,prompt,truth,predicted,event_ms\n", 0), 0u);
}

TEST(Evaluate, PerfectSeparation) {
  const auto e = evaluate(synthetic());
  EXPECT_EQ(e.accuracy(), 1.0);
  EXPECT_EQ(e.matrix.total(), 2 * 2 * 60);
  EXPECT_EQ(e.outcomes.size(), 240u);
  for (const auto &o : e.outcomes) {
    EXPECT_GE(o.event_ms, 0);
    EXPECT_EQ(o.predicted, o.truth);
  }
  EXPECT_EQ(e.per_user.size(), 2u);
}

TEST(Evaluate, EveryPromptIsScored) {
  const auto &e = study_baseline();
  EXPECT_EQ(e.matrix.total(), 2 * 2 * 60);
  int sum = 0;
  for (const auto &[id, m] : e.per_user)
    sum += m.total();
  EXPECT_EQ(sum, e.matrix.total());
  EXPECT_GE(e.accuracy(), 0.9);
}

TEST(Evaluate, ShuffledLabelsFallToChance) {
  EvalConfig c;
  c.shuffle_labels_seed = 5;
  const auto e = evaluate(small_study(), c);
  EXPECT_NEAR(e.accuracy(), 1.0 / 12.0, 0.05);
}

TEST(Evaluate, DeterministicTraining) {
  const auto a = train_all(small_study());
  const auto b = train_all(small_study());
  EXPECT_EQ(a, b);
}

TEST(Evaluate, MissingModelOrSessions) {
  auto models = train_all(synthetic());
  models.erase(synthetic()[1].user_id);
  EXPECT_THROW(evaluate_models(synthetic(), models, Condition::InSession), Error);
  EXPECT_THROW(evaluate(synthetic(), {{}, 0, Condition::Uncalibrated, std::nullopt}), Error);
  EXPECT_THROW(evaluate({}), Error);
}

TEST(ScoreSession, FirstEventInWindowCounts) {
  const auto &user = synthetic()[0];
  const auto p = train_user(user, {});
  const auto out = score_session(user.test[0], p);
  ASSERT_EQ(out.size(), 60u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto &prompt = user.test[0].prompts[i];
    EXPECT_EQ(out[i].prompt, i);
    EXPECT_GE(out[i].event_ms, prompt.start_ms);
    EXPECT_LT(out[i].event_ms, prompt.end_ms);
  }
}

TEST(ScoreSession, OnlyClassifiedPromptsAreReplayed) {
  const auto &user = synthetic()[0];
  EvalConfig c;
  c.pipeline.classes = dpad_subset().members;
  const auto out = score_session(user.test[0], train_user(user, c));
  EXPECT_EQ(out.size(), 20u);
  for (const auto &o : out)
    EXPECT_EQ(o.predicted, o.truth);
}

TEST(Ablation, FullGroupEqualsBaseline) {
  const auto r = ablate_subsets(small_study());
  EXPECT_EQ(r.baseline, study_baseline().accuracy());
  ASSERT_EQ(r.entries.size(), 5u);
  EXPECT_EQ(r.entries.back().name, "S1-9");
  EXPECT_EQ(r.entries.front().name, "S5");
  EXPECT_EQ(r.at("S1-9").accuracy, r.baseline);
  EXPECT_EQ(r.at("S1-9").drop, 0.0);
  const auto csv = ablation_csv(r);
  EXPECT_EQ(csv.rfind("configuration,channels,accuracy,drop\nbaseline,", 0), 0u);
}

TEST(Ablation, UninformativeChannelsCostNothing) {
  const auto r = ablate_exclude_one(synthetic(), {8, 9});
  EXPECT_EQ(r.baseline, 1.0);
  EXPECT_LE(r.at("without S9").drop, 0.01); // never in range
  EXPECT_LE(r.at("without S8").drop, 0.01); // copy of S7
  EXPECT_THROW(r.at("without S1"), Error);
}

TEST(Ablation, BadSensorIndex) {
  EXPECT_THROW(ablate_exclude_one(synthetic(), {10}), Error);
  EXPECT_THROW(ablate_exclude_one(synthetic(), {0}), Error);
}

TEST(Reduction, AllSessionsEqualsBaseline) {
  EXPECT_EQ(training_reduction(small_study(), 3).accuracy(), study_baseline().accuracy());
  EXPECT_THROW(training_reduction(small_study(), 0), Error);
  EXPECT_THROW(training_reduction(small_study(), 4), Error);
  const auto one = training_reduction(synthetic(), 1);
  EXPECT_EQ(one.matrix.total(), 240);
}

TEST(Subsets, Definitions) {
  EXPECT_EQ(dpad_subset().members.size(), 4u);
  EXPECT_EQ(corners_subset().members.size(), 4u);
  EXPECT_EQ(subset_by_name("all").members.size(), 12u);
  EXPECT_EQ(subset_by_name("corners").members, corners_subset().members);
  EXPECT_THROW(subset_by_name("diagonal"), Error);
}

TEST(Subsets, AllEqualsBaseline) {
  EXPECT_EQ(subset_eval(small_study(), full_subset(), false).accuracy(), study_baseline().accuracy());
}

TEST(Subsets, ScoresOnlyMembers) {
  const auto e = subset_eval(synthetic(), dpad_subset(), true);
  EXPECT_EQ(e.matrix.labels().size(), 4u);
  EXPECT_EQ(e.matrix.total(), 2 * 2 * 20);
  EXPECT_EQ(e.accuracy(), 1.0);
}

TEST(Subsets, NeedTwoPoses) {
  EXPECT_THROW(subset_eval(synthetic(), {"one", {Pose::IndexDistal}}, false), Error);
  EXPECT_THROW(subset_eval(synthetic(), {"dup", {Pose::IndexDistal, Pose::IndexDistal}}, false), Error);
  EXPECT_THROW(subset_eval(synthetic(), {"rest", {Pose::IndexDistal, Pose::NoPose}}, false), Error);
}

TEST(Summary, MentionsAccuracy) {
  const auto text = summary_text(study_baseline(), "in-session");
  EXPECT_NE(text.find("in-session"), std::string::npos);
  EXPECT_NE(text.find("accuracy"), std::string::npos);
}
