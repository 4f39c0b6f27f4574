#include "calibration.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace thumbtrak {

ChannelVector channel_medians(std::span<const SensorFrame> frames) {
  if (frames.size() < kMinCalibrationFrames)
    throw Error(ErrorKind::Input, "calibration needs at least " + std::to_string(kMinCalibrationFrames) +
                                      " frames per pose, got " + std::to_string(frames.size()));
  ChannelVector out{};
  std::vector<double> column(frames.size());
  for (std::size_t c = 0; c < kSensorCount; ++c) {
    for (std::size_t i = 0; i < frames.size(); ++i)
      column[i] = frames[i].readings[c];
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    out[c] = n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return out;
}

CalibrationReference capture_reference(std::span<const SensorFrame> little_proximal,
                                       std::span<const SensorFrame> little_distal) {
  return {{channel_medians(little_proximal), channel_medians(little_distal)}};
}

CalibrationReport check(const CalibrationReference &reference, const CalibrationReference &current) {
  CalibrationReport r;
  double sum = 0.0;
  double worst = -1.0;
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t c = 0; c < kSensorCount; ++c) {
      const double d = current.distances[p][c] - reference.distances[p][c];
      r.signed_offsets[p][c] = d;
      r.offsets[p][c] = std::abs(d);
      sum += r.offsets[p][c];
      if (r.offsets[p][c] > worst) {
        worst = r.offsets[p][c];
        r.worst_pose = p;
        r.worst_sensor = c;
      }
    }
  }
  r.average_offset = sum / static_cast<double>(2 * kSensorCount);
  // Inclusive, with slack for the rounding of 18 summed offsets.
  r.pass = r.average_offset <= kCalibrationThresholdMm + 1e-9;
  return r;
}

CalibrationReport check(const CalibrationReference &reference, std::span<const SensorFrame> little_proximal,
                        std::span<const SensorFrame> little_distal) {
  return check(reference, capture_reference(little_proximal, little_distal));
}

CalibrationHint guidance(const CalibrationReport &report) {
  CalibrationHint h;
  if (report.pass)
    return h;
  h.adjust = true;
  h.sensor = report.worst_sensor + 1;
  h.pose = kCalibrationPoses[report.worst_pose];
  h.offset_mm = report.signed_offsets[report.worst_pose][report.worst_sensor];
  h.direction = h.offset_mm > 0.0 ? CalibrationHint::Direction::TooFar : CalibrationHint::Direction::TooNear;
  return h;
}

std::string to_string(CalibrationHint::Direction d) {
  switch (d) {
  case CalibrationHint::Direction::TooNear:
    return "too near";
  case CalibrationHint::Direction::TooFar:
    return "too far";
  case CalibrationHint::Direction::None:
    break;
  }
  return "none";
}

std::string CalibrationHint::text() const {
  if (!adjust)
    return "no adjustment needed";
  char buf[160];
  std::snprintf(buf, sizeof buf, "S%zu reads %s during %s (%+.2f mm); adjust the ring", sensor,
                to_string(direction).c_str(), std::string(thumbtrak::to_string(pose)).c_str(), offset_mm);
  return buf;
}

} // namespace thumbtrak
