#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace thumbtrak {

inline constexpr std::size_t kSensorCount = 9;
inline constexpr double kMaxRangeMm = 150.0;
inline constexpr std::size_t kFeatureCount = kSensorCount + 2;

/// Raw value a sensor reports when nothing returns within its range.
inline constexpr double kNoTarget = -1.0;

struct SensorFrame {
  std::int64_t timestamp_ms = 0;
  std::array<double, kSensorCount> readings{};
  std::array<bool, kSensorCount> out_of_range{};

  bool operator==(const SensorFrame &) const = default;
};

/// Clamps raw distances to the sensor range. Values at or beyond 150 mm and
/// the no-target sentinel become 150 with the out-of-range flag set.
/// Throws Error(Input) on any other negative value or NaN.
SensorFrame clamp_raw(std::span<const double> raw, std::int64_t timestamp_ms = 0);

/// Sorted 0-based sensor indices retained for feature extraction.
class ChannelSet {
public:
  ChannelSet(); // all nine
  explicit ChannelSet(std::vector<int> channels);

  /// Channels first..last given as 1-based sensor numbers (S1..S9), inclusive.
  static ChannelSet sensors(int first, int last);
  static ChannelSet all_except(int sensor);

  std::span<const int> indices() const { return channels_; }
  std::size_t size() const { return channels_.size(); }
  std::size_t feature_dim() const { return channels_.size() + 2; }
  bool operator==(const ChannelSet &) const = default;

private:
  std::vector<int> channels_;
};

/// Per-frame feature vector: the retained clamped distances, followed by the
/// out-of-range count and the mean of the in-range readings.
class FeatureVector {
public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {}

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<const double> distances() const { return {values_.data(), values_.size() - 2}; }
  double out_of_range_count() const { return values_[values_.size() - 2]; }
  double in_range_mean() const { return values_.back(); }

  bool operator==(const FeatureVector &) const = default;

private:
  std::vector<double> values_;
};

FeatureVector extract(const SensorFrame &frame);
FeatureVector extract(const SensorFrame &frame, const ChannelSet &channels);

} // namespace thumbtrak
