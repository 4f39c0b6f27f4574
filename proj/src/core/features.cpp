#include "features.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace thumbtrak {

SensorFrame clamp_raw(std::span<const double> raw, std::int64_t timestamp_ms) {
  if (raw.size() != kSensorCount)
    throw Error(ErrorKind::Input, "expected " + std::to_string(kSensorCount) + " raw distances, got " +
                                      std::to_string(raw.size()));
  SensorFrame frame;
  frame.timestamp_ms = timestamp_ms;
  for (std::size_t i = 0; i < kSensorCount; ++i) {
    const double r = raw[i];
    if (r == kNoTarget || r >= kMaxRangeMm) {
      frame.readings[i] = kMaxRangeMm;
      frame.out_of_range[i] = true;
    } else if (std::isnan(r) || r < 0.0) {
      throw Error(ErrorKind::Input, "negative raw distance on sensor S" + std::to_string(i + 1));
    } else {
      frame.readings[i] = r;
      frame.out_of_range[i] = false;
    }
  }
  return frame;
}

ChannelSet::ChannelSet() : channels_{0, 1, 2, 3, 4, 5, 6, 7, 8} {}

ChannelSet::ChannelSet(std::vector<int> channels) : channels_(std::move(channels)) {
  std::sort(channels_.begin(), channels_.end());
  if (channels_.empty())
    throw Error(ErrorKind::Input, "channel set must not be empty");
  if (std::adjacent_find(channels_.begin(), channels_.end()) != channels_.end())
    throw Error(ErrorKind::Input, "channel set contains duplicates");
  if (channels_.front() < 0 || channels_.back() >= static_cast<int>(kSensorCount))
    throw Error(ErrorKind::Input, "channel index out of range");
}

ChannelSet ChannelSet::sensors(int first, int last) {
  if (first < 1 || last > static_cast<int>(kSensorCount) || first > last)
    throw Error(ErrorKind::Input, "sensor range must lie within S1..S9");
  std::vector<int> c;
  for (int s = first; s <= last; ++s)
    c.push_back(s - 1);
  return ChannelSet(std::move(c));
}

ChannelSet ChannelSet::all_except(int sensor) {
  if (sensor < 1 || sensor > static_cast<int>(kSensorCount))
    throw Error(ErrorKind::Input, "sensor index must be in 1..9, got " + std::to_string(sensor));
  std::vector<int> c;
  for (int s = 1; s <= static_cast<int>(kSensorCount); ++s)
    if (s != sensor)
      c.push_back(s - 1);
  return ChannelSet(std::move(c));
}

FeatureVector extract(const SensorFrame &frame) { return extract(frame, ChannelSet{}); }

FeatureVector extract(const SensorFrame &frame, const ChannelSet &channels) {
  std::vector<double> v;
  v.reserve(channels.feature_dim());
  int oor = 0;
  double sum = 0.0;
  int in_range = 0;
  for (int c : channels.indices()) {
    v.push_back(frame.readings[c]);
    if (frame.out_of_range[c]) {
      ++oor;
    } else {
      sum += frame.readings[c];
      ++in_range;
    }
  }
  v.push_back(static_cast<double>(oor));
  v.push_back(in_range ? sum / in_range : kMaxRangeMm);
  return FeatureVector(std::move(v));
}

} // namespace thumbtrak
