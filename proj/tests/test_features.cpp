#include "errors.hpp"
#include "features.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

using namespace thumbtrak;

namespace {

using Raw = std::array<double, kSensorCount>;

Raw filled(double v) {
  Raw r;
  r.fill(v);
  return r;
}

} // namespace

TEST(ClampRaw, ValueAboveRangeIsClampedAndFlagged) {
  Raw raw = filled(75.0);
  raw[0] = 162.3;
  const auto f = clamp_raw(raw);
  EXPECT_EQ(f.readings[0], 150.0);
  EXPECT_TRUE(f.out_of_range[0]);
  for (std::size_t i = 1; i < kSensorCount; ++i)
    EXPECT_FALSE(f.out_of_range[i]);
}

TEST(ClampRaw, InRangeValuesPassThrough) {
  const auto f = clamp_raw(filled(75.0));
  for (std::size_t i = 0; i < kSensorCount; ++i) {
    EXPECT_EQ(f.readings[i], 75.0);
    EXPECT_FALSE(f.out_of_range[i]);
  }
}

TEST(ClampRaw, ExactlyMaxRangeIsOutOfRange) {
  const auto f = clamp_raw(filled(150.0));
  for (std::size_t i = 0; i < kSensorCount; ++i) {
    EXPECT_EQ(f.readings[i], 150.0);
    EXPECT_TRUE(f.out_of_range[i]);
  }
}

TEST(ClampRaw, JustBelowMaxRangeIsInRange) {
  const double v = std::nextafter(150.0, 0.0);
  const auto f = clamp_raw(filled(v));
  EXPECT_EQ(f.readings[3], v);
  EXPECT_FALSE(f.out_of_range[3]);
}

TEST(ClampRaw, NoTargetSentinelIsOutOfRange) {
  Raw raw = filled(20.0);
  raw[4] = kNoTarget;
  const auto f = clamp_raw(raw);
  EXPECT_EQ(f.readings[4], 150.0);
  EXPECT_TRUE(f.out_of_range[4]);
}

TEST(ClampRaw, ZeroIsAValidReading) {
  const auto f = clamp_raw(filled(0.0));
  EXPECT_EQ(f.readings[0], 0.0);
  EXPECT_FALSE(f.out_of_range[0]);
}

TEST(ClampRaw, NegativeValueIsAnInputError) {
  Raw raw = filled(10.0);
  raw[2] = -0.5;
  try {
    clamp_raw(raw);
    FAIL() << "expected an input error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
  }
}

TEST(ClampRaw, NanIsAnInputError) {
  Raw raw = filled(10.0);
  raw[8] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(clamp_raw(raw), Error);
}

TEST(ClampRaw, InfinityIsOutOfRange) {
  Raw raw = filled(10.0);
  raw[1] = std::numeric_limits<double>::infinity();
  const auto f = clamp_raw(raw);
  EXPECT_EQ(f.readings[1], 150.0);
  EXPECT_TRUE(f.out_of_range[1]);
}

TEST(ClampRaw, WrongChannelCountIsAnInputError) {
  const std::array<double, 8> short_raw{};
  EXPECT_THROW(clamp_raw(short_raw), Error);
}

TEST(ClampRaw, KeepsTimestamp) { EXPECT_EQ(clamp_raw(filled(1.0), 1234).timestamp_ms, 1234); }

TEST(Extract, MeanOfNineValues) {
  const Raw raw = {10, 20, 30, 40, 50, 60, 70, 80, 90};
  const auto fv = extract(clamp_raw(raw));
  ASSERT_EQ(fv.size(), kFeatureCount);
  for (std::size_t i = 0; i < kSensorCount; ++i)
    EXPECT_EQ(fv[i], raw[i]);
  EXPECT_EQ(fv.out_of_range_count(), 0.0);
  EXPECT_EQ(fv.in_range_mean(), 50.0);
}

TEST(Extract, AllOutOfRange) {
  const auto fv = extract(clamp_raw(filled(kNoTarget)));
  EXPECT_EQ(fv.out_of_range_count(), 9.0);
  EXPECT_EQ(fv.in_range_mean(), 150.0);
}

TEST(Extract, MeanOfInRangeSubset) {
  const Raw raw = {30, 30, 30, 150, 150, 150, 150, 150, 150};
  const auto fv = extract(clamp_raw(raw));
  EXPECT_EQ(fv.out_of_range_count(), 6.0);
  EXPECT_EQ(fv.in_range_mean(), 30.0);
}

// Every in/out-of-range pattern over the nine channels.
TEST(Extract, ExhaustiveFlagPatterns) {
  for (unsigned mask = 0; mask < (1u << kSensorCount); ++mask) {
    Raw raw;
    double sum = 0.0;
    int in = 0;
    for (std::size_t i = 0; i < kSensorCount; ++i) {
      const bool out = (mask >> i) & 1u;
      raw[i] = out ? 150.0 + static_cast<double>(i) : 5.0 + 3.0 * static_cast<double>(i);
      if (!out) {
        sum += raw[i];
        ++in;
      }
    }
    const auto frame = clamp_raw(raw);
    const auto fv = extract(frame);
    ASSERT_EQ(fv.out_of_range_count(), static_cast<double>(std::popcount(mask))) << mask;
    const double expected_mean = in ? sum / in : 150.0;
    ASSERT_DOUBLE_EQ(fv.in_range_mean(), expected_mean) << mask;
    for (std::size_t i = 0; i < kSensorCount; ++i) {
      ASSERT_EQ(frame.out_of_range[i], frame.readings[i] == 150.0);
      ASSERT_EQ(fv[i], frame.readings[i]);
    }
  }
}

TEST(Extract, ReclampingIsIdempotent) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(0.0, 200.0);
  for (int k = 0; k < 500; ++k) {
    Raw raw;
    for (auto &v : raw)
      v = d(gen);
    const auto once = clamp_raw(raw);
    const auto twice = clamp_raw(once.readings);
    ASSERT_EQ(once, twice);
    ASSERT_EQ(extract(once), extract(twice));
  }
}

TEST(Extract, MeanLiesBetweenInRangeExtremes) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> d(0.0, 180.0);
  for (int k = 0; k < 2000; ++k) {
    Raw raw;
    for (auto &v : raw)
      v = d(gen);
    const auto f = clamp_raw(raw);
    const auto fv = extract(f);
    if (fv.out_of_range_count() == 9.0)
      continue;
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < kSensorCount; ++i)
      if (!f.out_of_range[i]) {
        lo = std::min(lo, f.readings[i]);
        hi = std::max(hi, f.readings[i]);
      }
    ASSERT_GE(fv.in_range_mean(), lo - 1e-12);
    ASSERT_LE(fv.in_range_mean(), hi + 1e-12);
  }
}

TEST(Extract, SwappingTwoChannelsPermutesDistancesOnly) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> d(0.0, 170.0);
  for (int k = 0; k < 500; ++k) {
    Raw raw;
    for (auto &v : raw)
      v = d(gen);
    const std::size_t a = gen() % kSensorCount, b = gen() % kSensorCount;
    Raw swapped = raw;
    std::swap(swapped[a], swapped[b]);
    const auto f1 = extract(clamp_raw(raw));
    const auto f2 = extract(clamp_raw(swapped));
    ASSERT_EQ(f1[a], f2[b]);
    ASSERT_EQ(f1[b], f2[a]);
    ASSERT_EQ(f1.out_of_range_count(), f2.out_of_range_count());
    // Summation order changes, so allow rounding in the mean.
    ASSERT_NEAR(f1.in_range_mean(), f2.in_range_mean(), 1e-12);
  }
}

TEST(Extract, FeatureRanges) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> d(0.0, 300.0);
  for (int k = 0; k < 1000; ++k) {
    Raw raw;
    for (auto &v : raw)
      v = d(gen);
    const auto fv = extract(clamp_raw(raw));
    for (std::size_t i = 0; i < kSensorCount; ++i) {
      ASSERT_GE(fv[i], 0.0);
      ASSERT_LE(fv[i], 150.0);
    }
    ASSERT_GE(fv.out_of_range_count(), 0.0);
    ASSERT_LE(fv.out_of_range_count(), 9.0);
    ASSERT_GE(fv.in_range_mean(), 0.0);
    ASSERT_LE(fv.in_range_mean(), 150.0);
  }
}

TEST(ChannelSet, SubsetFeatures) {
  const Raw raw = {10, 20, 30, 150, 50, 60, 70, 80, 90};
  const auto f = clamp_raw(raw);
  const auto fv = extract(f, ChannelSet::sensors(3, 5));
  ASSERT_EQ(fv.size(), 5u);
  EXPECT_EQ(fv[0], 30.0);
  EXPECT_EQ(fv[1], 150.0);
  EXPECT_EQ(fv[2], 50.0);
  EXPECT_EQ(fv.out_of_range_count(), 1.0);
  EXPECT_EQ(fv.in_range_mean(), 40.0);
}

TEST(ChannelSet, AllExceptDropsOneSensor) {
  const auto c = ChannelSet::all_except(4);
  ASSERT_EQ(c.size(), 8u);
  EXPECT_EQ(c.feature_dim(), 10u);
  for (int i : c.indices())
    EXPECT_NE(i, 3);
}

TEST(ChannelSet, FullSetMatchesDefaultExtraction) {
  const Raw raw = {1, 2, 3, 4, 150, 6, 7, 8, 9};
  const auto f = clamp_raw(raw);
  EXPECT_EQ(extract(f), extract(f, ChannelSet::sensors(1, 9)));
  EXPECT_EQ(ChannelSet(), ChannelSet::sensors(1, 9));
}

TEST(ChannelSet, RejectsBadSensors) {
  EXPECT_THROW(ChannelSet::all_except(0), Error);
  EXPECT_THROW(ChannelSet::all_except(10), Error);
  EXPECT_THROW(ChannelSet::sensors(5, 4), Error);
  EXPECT_THROW(ChannelSet(std::vector<int>{}), Error);
  EXPECT_THROW(ChannelSet(std::vector<int>{2, 2}), Error);
}
