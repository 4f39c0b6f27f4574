#pragma once

// Remount check: compares the ring's readings for two reference poses
// against those captured at the original mount.

#include "features.hpp"
#include "pose.hpp"

#include <array>
#include <span>
#include <string>

namespace thumbtrak {

/// Reference poses, furthest from the thumb.
inline constexpr std::array<Pose, 2> kCalibrationPoses = {Pose::LittleProximal, Pose::LittleDistal};
inline constexpr std::size_t kMinCalibrationFrames = 10;
inline constexpr double kCalibrationThresholdMm = 0.7;

using ChannelVector = std::array<double, kSensorCount>;

struct CalibrationReference {
  std::array<ChannelVector, 2> distances{}; // per calibration pose, per sensor
  bool operator==(const CalibrationReference &) const = default;
};

struct CalibrationReport {
  std::array<ChannelVector, 2> offsets{};        // |current - reference|
  std::array<ChannelVector, 2> signed_offsets{}; // current - reference
  double average_offset = 0.0;                   // mean of all 18 offsets
  bool pass = true;                              // average_offset <= threshold
  std::size_t worst_pose = 0;                    // index into kCalibrationPoses
  std::size_t worst_sensor = 0;                  // 0-based
  bool operator==(const CalibrationReport &) const = default;
};

/// Per-channel median of the frames. Throws Error(Input) on fewer than
/// kMinCalibrationFrames frames.
ChannelVector channel_medians(std::span<const SensorFrame> frames);

/// Frames for little-proximal then little-distal.
CalibrationReference capture_reference(std::span<const SensorFrame> little_proximal,
                                       std::span<const SensorFrame> little_distal);

CalibrationReport check(const CalibrationReference &reference, const CalibrationReference &current);
CalibrationReport check(const CalibrationReference &reference, std::span<const SensorFrame> little_proximal,
                        std::span<const SensorFrame> little_distal);

struct CalibrationHint {
  enum class Direction { None, TooNear, TooFar };

  bool adjust = false;
  std::size_t sensor = 0; // 1-based; 0 when no adjustment is needed
  Pose pose = Pose::NoPose;
  Direction direction = Direction::None;
  double offset_mm = 0.0; // signed, current - reference

  std::string text() const;
  bool operator==(const CalibrationHint &) const = default;
};

/// Names the sensor with the largest offset and whether it now reads nearer
/// or farther than its reference. A passing report yields no adjustment.
CalibrationHint guidance(const CalibrationReport &report);

std::string to_string(CalibrationHint::Direction d);

} // namespace thumbtrak
