#include "errors.hpp"
#include "linear_svm.hpp"
#include "oracles/svm_datasets.hpp"
#include "oracles/svm_oracle.hpp"
#include "rng.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

using namespace thumbtrak;
using namespace thumbtrak::svm;
using oracle::Binary;
using oracle::separable;
using oracle::standardized;

namespace {

Samples from_rows(const std::vector<std::vector<double>> &rows) {
  Samples s(rows.at(0).size());
  for (const auto &r : rows)
    s.push(r);
  return s;
}

} // namespace

TEST(SvmOracle, FiftySeparableDatasetsAgreeWithReference) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = 1 + rng.below(11);
    const std::size_t n = 20 + rng.below(281);
    const auto data = separable(rng, n, d, 0.5);
    Hyperparameters hp;
    hp.seed = static_cast<std::uint64_t>(k);
    hp.tol = 1e-6;
    hp.max_epochs = 5000;
    const LinearModel model = train_binary(data.x, data.labels(), hp);

    const auto rows = standardized(data.x);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = data.pos[i] ? 1.0 : -1.0;
    const auto ref = oracle::solve_svm(rows, y, hp.C);
    ASSERT_LE(ref.primal - ref.dual, 1e-8 * std::max(1.0, ref.primal)) << "oracle did not converge, set " << k;

    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j <= d; ++j)
        s += ref.w[j] * rows[i][j];
      const bool oracle_pos = s >= 0.0;
      ASSERT_EQ(model.predict(data.x.row(i)).is_pose, oracle_pos) << "set " << k << " point " << i;
      ASSERT_EQ(oracle_pos, data.pos[i]) << "set " << k << " point " << i;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LE(secs, 60.0);
}

TEST(SvmDual, VariablesBoxedAndObjectiveNonDecreasing) {
  Rng rng(77);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = 1 + rng.below(11);
    const std::size_t n = 20 + rng.below(281);
    // Overlapping classes too, so some duals sit at C.
    auto data = separable(rng, n, d, k % 2 ? 0.5 : 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (k % 2 == 0 && rng.bernoulli(0.1))
        data.pos[i] = !data.pos[i];
    const auto z = from_rows(standardized(data.x));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = data.pos[i] ? 1.0 : -1.0;
    Hyperparameters hp;
    hp.C = k % 3 == 0 ? 0.1 : 1.0;
    hp.seed = static_cast<std::uint64_t>(k);
    const auto sol = solve_dual_cd(z, y, hp, true);
    for (double a : sol.alpha) {
      ASSERT_GE(a, 0.0);
      ASSERT_LE(a, hp.C);
    }
    ASSERT_FALSE(sol.objective_trace.empty());
    for (std::size_t e = 1; e < sol.objective_trace.size(); ++e)
      ASSERT_GE(sol.objective_trace[e], sol.objective_trace[e - 1] - 1e-9) << "set " << k << " epoch " << e;
    EXPECT_NEAR(dual_objective(sol), sol.objective_trace.back(), 1e-9);
  }
}

TEST(TrainBinary, SymmetricPair) {
  Samples x(1);
  x.push(std::vector<double>{-1.0});
  x.push(std::vector<double>{1.0});
  const bool pos[] = {false, true};
  const auto m = train_binary(x, pos);
  EXPECT_FALSE(m.predict(x.row(0)).is_pose);
  EXPECT_TRUE(m.predict(x.row(1)).is_pose);
  EXPECT_LT(std::fabs(m.biases[0]), 1e-3);
}

TEST(TrainBinary, XorIsNotLearnable) {
  Samples x(2);
  const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const bool pos[] = {false, false, true, true};
  for (const auto &p : pts)
    x.push(p);
  const auto m = train_binary(x, pos);
  int right = 0;
  for (std::size_t i = 0; i < 4; ++i)
    right += m.predict(x.row(i)).is_pose == pos[i];
  EXPECT_LE(right / 4.0, 0.75);
}

TEST(TrainBinary, SingleClassIsATrainingError) {
  Samples x(1);
  x.push(std::vector<double>{1.0});
  x.push(std::vector<double>{2.0});
  const bool pos[] = {true, true};
  try {
    train_binary(x, pos);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Training);
  }
}

TEST(TrainBinary, NonPositiveCostIsRejected) {
  Samples x(1);
  x.push(std::vector<double>{1.0});
  x.push(std::vector<double>{2.0});
  const bool pos[] = {true, false};
  Hyperparameters hp;
  hp.C = 0.0;
  EXPECT_THROW(train_binary(x, pos, hp), Error);
}

TEST(TrainBinary, ScoreZeroCountsAsPositive) {
  LinearModel m;
  m.kind = ModelKind::Binary;
  m.weights = {{1.0}};
  m.biases = {0.0};
  m.scaler.mean = {0.0};
  m.scaler.stddev = {1.0};
  const double zero[] = {0.0};
  EXPECT_TRUE(m.predict(zero).is_pose);
  const double below[] = {-1e-12};
  EXPECT_FALSE(m.predict(below).is_pose);
}

TEST(TrainBinary, DeterministicForSeed) {
  Rng rng(8);
  const auto data = separable(rng, 150, 6, 0.1);
  Hyperparameters hp;
  hp.seed = 5;
  const auto a = train_binary(data.x, data.labels(), hp);
  const auto b = train_binary(data.x, data.labels(), hp);
  EXPECT_EQ(a, b);
}

TEST(TrainBinary, ScalingFeaturesLeavesDecisionsUnchanged) {
  Rng rng(13);
  for (int k = 0; k < 10; ++k) {
    const auto data = separable(rng, 120, 5, 0.2);
    Samples scaled(data.x.dim());
    const double factor = rng.uniform(0.01, 100.0);
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      std::vector<double> r(data.x.row(i).begin(), data.x.row(i).end());
      for (auto &v : r)
        v *= factor;
      scaled.push(r);
    }
    Hyperparameters hp;
    hp.tol = 1e-8;
    hp.max_epochs = 20000;
    const auto a = train_binary(data.x, data.labels(), hp);
    const auto b = train_binary(scaled, data.labels(), hp);
    for (std::size_t i = 0; i < data.x.size(); ++i)
      ASSERT_EQ(a.predict(data.x.row(i)).is_pose, b.predict(scaled.row(i)).is_pose) << k << " " << i;
  }
}

TEST(TrainMulticlass, SeparatedClusters) {
  Rng rng(4);
  Samples x(2);
  std::vector<Pose> y;
  const Pose classes[] = {Pose::IndexDistal, Pose::RingMiddle, Pose::LittleProximal};
  const double centers[3][2] = {{0, 0}, {10, 0}, {5, 8.66}};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 40; ++i) {
      const double p[] = {centers[c][0] + rng.normal(0, 0.1), centers[c][1] + rng.normal(0, 0.1)};
      x.push(p);
      y.push_back(classes[c]);
    }
  const auto m = train_multiclass(x, y);
  ASSERT_EQ(m.classes.size(), 3u);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_EQ(m.predict(x.row(i)).label, y[i]);
}

TEST(TrainMulticlass, DuplicatePointWithTwoLabels) {
  Rng rng(6);
  Samples x(2);
  std::vector<Pose> y;
  for (int i = 0; i < 30; ++i) {
    const double a[] = {rng.normal(0, 1), rng.normal(5, 1)};
    x.push(a);
    y.push_back(Pose::IndexDistal);
    const double b[] = {rng.normal(5, 1), rng.normal(0, 1)};
    x.push(b);
    y.push_back(Pose::MiddleDistal);
  }
  const double dup[] = {2.5, 2.5};
  x.push(dup);
  y.push_back(Pose::IndexDistal);
  x.push(dup);
  y.push_back(Pose::MiddleDistal);
  const auto m = train_multiclass(x, y);
  const Pose predicted = m.predict(dup).label;
  EXPECT_TRUE(predicted != Pose::IndexDistal || predicted != Pose::MiddleDistal);
  const int wrong = (predicted != Pose::IndexDistal) + (predicted != Pose::MiddleDistal);
  EXPECT_GE(wrong, 1);
}

TEST(TrainMulticlass, MissingListedClassIsNamed) {
  Samples x(1);
  std::vector<Pose> y;
  for (int i = 0; i < 4; ++i) {
    const double v[] = {static_cast<double>(i)};
    x.push(v);
    y.push_back(i < 2 ? Pose::IndexDistal : Pose::IndexMiddle);
  }
  try {
    train_multiclass(x, y, {}, std::vector<Pose>{Pose::IndexDistal, Pose::IndexMiddle, Pose::RingDistal});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Training);
    EXPECT_NE(std::string(e.what()).find("ring-distal"), std::string::npos);
  }
}

TEST(TrainMulticlass, SingleClassIsATrainingError) {
  Samples x(1);
  std::vector<Pose> y;
  for (int i = 0; i < 4; ++i) {
    const double v[] = {static_cast<double>(i)};
    x.push(v);
    y.push_back(Pose::IndexDistal);
  }
  EXPECT_THROW(train_multiclass(x, y), Error);
}

TEST(Predict, DeepInsideClusterWinsStrictly) {
  Rng rng(21);
  Samples x(2);
  std::vector<Pose> y;
  const double centers[3][2] = {{0, 0}, {20, 0}, {0, 20}};
  const Pose classes[] = {Pose::IndexDistal, Pose::IndexMiddle, Pose::IndexProximal};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 30; ++i) {
      const double p[] = {centers[c][0] + rng.normal(), centers[c][1] + rng.normal()};
      x.push(p);
      y.push_back(classes[c]);
    }
  const auto m = train_multiclass(x, y);
  for (int c = 0; c < 3; ++c) {
    const auto p = m.predict(centers[c]);
    EXPECT_EQ(p.label, classes[c]);
    for (std::size_t k = 0; k < 3; ++k)
      if (k != static_cast<std::size_t>(c)) {
        EXPECT_GT(p.scores[static_cast<std::size_t>(c)], p.scores[k]);
      }
  }
}

TEST(Predict, TiesGoToLowestClassIndex) {
  LinearModel m;
  m.kind = ModelKind::Multiclass;
  m.classes = {Pose::RingDistal, Pose::IndexDistal, Pose::MiddleDistal};
  m.weights = {{0.0}, {0.0}, {0.0}};
  m.biases = {0.5, 0.5, 0.5};
  m.scaler.mean = {0.0};
  m.scaler.stddev = {1.0};
  const double x[] = {3.0};
  const auto p = m.predict(x);
  EXPECT_EQ(p.class_index, 0u);
  EXPECT_EQ(p.label, Pose::RingDistal);
}

TEST(Predict, WrongLengthIsADimensionError) {
  Rng rng(1);
  const auto data = separable(rng, 40, 3, 0.3);
  const auto m = train_binary(data.x, data.labels());
  const double x[] = {1.0, 2.0};
  try {
    m.predict(x);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Dimension);
  }
}

TEST(Scaler, FloorsConstantFeatures) {
  Samples x(2);
  for (int i = 0; i < 5; ++i) {
    const double r[] = {3.0, static_cast<double>(i)};
    x.push(r);
  }
  const auto s = Scaler::fit(x);
  EXPECT_EQ(s.stddev[0], Scaler::kMinStd);
  EXPECT_EQ(s.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(s.mean[1], 2.0);
  EXPECT_DOUBLE_EQ(s.stddev[1], std::sqrt(2.0));
}

class ModelFile : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("tt_svm_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
    Rng rng(31);
    Samples x(11);
    for (int c = 0; c < 12; ++c)
      for (int i = 0; i < 15; ++i) {
        std::vector<double> r(11);
        for (std::size_t j = 0; j < 11; ++j)
          r[j] = rng.normal(c * (j + 1) % 7, 1.0);
        x.push(r);
        labels_.push_back(static_cast<Pose>(c));
      }
    x_ = x;
    model_ = train_multiclass(x_, labels_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path dir_;
  Samples x_{11};
  std::vector<Pose> labels_;
  LinearModel model_;
};

TEST_F(ModelFile, RoundTripReproducesScoresExactly) {
  const auto path = dir_ / "m.json";
  save_model(model_, path);
  const auto back = load_model(path);
  EXPECT_EQ(back, model_);
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> v(11);
    for (auto &e : v)
      e = rng.uniform(-50, 150);
    EXPECT_EQ(back.scores(v), model_.scores(v));
    EXPECT_EQ(back.predict(v).label, model_.predict(v).label);
  }
}

TEST_F(ModelFile, TruncatedFileFailsToLoad) {
  const std::string text = to_json(model_);
  const auto path = dir_ / "cut.json";
  std::ofstream(path) << text.substr(0, text.size() / 2);
  try {
    load_model(path);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}

TEST_F(ModelFile, FutureVersionIsAVersionError) {
  std::string text = to_json(model_);
  const auto pos = text.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 12, "\"version\": 2");
  try {
    model_from_json(text);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Version);
  }
}

TEST_F(ModelFile, MissingFileIsAnIoError) {
  try {
    load_model(dir_ / "nope.json");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}
