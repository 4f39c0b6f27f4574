#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace thumbtrak {

/// Thumb-to-phalanx touch targets. The twelve poses form a 3x4 grid
/// (phalanx x finger); NoPose is the resting state.
enum class Pose : std::uint8_t {
  IndexDistal,
  IndexMiddle,
  IndexProximal,
  MiddleDistal,
  MiddleMiddle,
  MiddleProximal,
  RingDistal,
  RingMiddle,
  RingProximal,
  LittleDistal,
  LittleMiddle,
  LittleProximal,
  NoPose,
};

inline constexpr std::size_t kPoseCount = 12;
inline constexpr std::size_t kLabelCount = 13;

enum class Finger : std::uint8_t { Index, Middle, Ring, Little };
enum class Phalanx : std::uint8_t { Distal, Middle, Proximal };

inline constexpr std::array<Pose, kPoseCount> kAllPoses = {
    Pose::IndexDistal,   Pose::IndexMiddle,    Pose::IndexProximal, Pose::MiddleDistal,
    Pose::MiddleMiddle,  Pose::MiddleProximal, Pose::RingDistal,    Pose::RingMiddle,
    Pose::RingProximal,  Pose::LittleDistal,   Pose::LittleMiddle,  Pose::LittleProximal,
};

inline constexpr std::array<Pose, kLabelCount> kAllLabels = {
    Pose::IndexDistal,   Pose::IndexMiddle,    Pose::IndexProximal, Pose::MiddleDistal,
    Pose::MiddleMiddle,  Pose::MiddleProximal, Pose::RingDistal,    Pose::RingMiddle,
    Pose::RingProximal,  Pose::LittleDistal,   Pose::LittleMiddle,  Pose::LittleProximal,
    Pose::NoPose,
};

constexpr std::size_t index_of(Pose p) { return static_cast<std::size_t>(p); }
constexpr bool is_touch(Pose p) { return p != Pose::NoPose; }

constexpr Finger finger_of(Pose p) { return static_cast<Finger>(index_of(p) / 3); }
constexpr Phalanx phalanx_of(Pose p) { return static_cast<Phalanx>(index_of(p) % 3); }

constexpr Pose pose_of(Finger f, Phalanx ph) {
  return static_cast<Pose>(static_cast<std::size_t>(f) * 3 + static_cast<std::size_t>(ph));
}

inline constexpr std::array<std::string_view, kLabelCount> kPoseNames = {
    "index-distal",  "index-middle",  "index-proximal",  "middle-distal", "middle-middle",
    "middle-proximal", "ring-distal", "ring-middle",     "ring-proximal", "little-distal",
    "little-middle", "little-proximal", "no-pose",
};

constexpr std::string_view to_string(Pose p) { return kPoseNames[index_of(p)]; }

constexpr std::optional<Pose> pose_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (kPoseNames[i] == name)
      return static_cast<Pose>(i);
  }
  return std::nullopt;
}

} // namespace thumbtrak
