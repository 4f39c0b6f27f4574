#pragma once

// Capsule hand model with a ray-cast proximity ring on the thumb.
//
// Frame: origin at the wrist, +x toward the fingertips, +y toward the thumb
// (radial), +z out of the palm. Lengths are millimetres at scale 1 and are
// multiplied by HandConfig::scale when posed. Angles are degrees.

#include "features.hpp"
#include "geometry.hpp"
#include "pose.hpp"
#include "rng.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace thumbtrak::sim {

struct FingerGeometry {
  Vec3 base;                     // MCP joint
  std::array<double, 3> lengths; // proximal, middle, distal
  std::array<double, 3> radii;
};

struct HandConfig {
  std::array<FingerGeometry, 4> fingers; // index, middle, ring, little
  Vec3 thumb_base;                       // CMC joint
  std::array<double, 3> thumb_lengths;   // metacarpal, proximal, distal
  std::array<double, 3> thumb_radii;
  Vec3 palm_a, palm_b; // palm slab axis, spanning the palm width
  double palm_radius = 0.0;
  double scale = 1.0;

  static constexpr double kMinScale = 0.7;
  static constexpr double kMaxScale = 1.3;

  /// Throws Error(Config) on non-positive lengths/radii or scale outside range.
  void validate() const;
  double thumb_proximal_length() const { return thumb_lengths[1] * scale; }
  static HandConfig reference();
};

struct FingerAngles {
  double mcp_flex = 0.0;
  double mcp_abd = 0.0; // + toward the thumb
  double pip_flex = 0.0;
  double dip_flex = 0.0;
  bool operator==(const FingerAngles &) const = default;
};

struct ThumbAngles {
  double cmc_flex = 0.0; // sweep across the palm toward the little finger
  double cmc_abd = 0.0;  // lift out of the palm plane
  double mcp_flex = 0.0;
  double ip_flex = 0.0;
  bool operator==(const ThumbAngles &) const = default;
};

struct JointAngles {
  std::array<FingerAngles, 4> fingers{};
  ThumbAngles thumb{};
  bool operator==(const JointAngles &) const = default;
};

JointAngles interpolate(const JointAngles &from, const JointAngles &to, double fraction);
bool within_limits(const JointAngles &a);
/// Clamps every joint into its anatomical range.
JointAngles clamp_to_limits(const JointAngles &a);

/// Joint angles realizing each label, indexed by index_of(Pose).
using PoseAngles = std::array<JointAngles, kLabelCount>;

struct RingMount {
  double axial_mm = 14.0;    // distance from the thumb MCP joint along the proximal phalanx
  double rotation_deg = 0.0; // about the thumb axis, in [-180, 180)
  double tilt_deg = 0.0;     // rocking toward the thumb tip
  bool operator==(const RingMount &) const = default;
};

/// Ring-local sensor layout. Local frame: x along the thumb toward the tip,
/// y toward the thumb pad, z = x cross y. Origins are millimetres at scale 1.
struct SensorRig {
  std::array<Vec3, kSensorCount> origins;
  std::array<Vec3, kSensorCount> directions;
  double max_range_mm = kMaxRangeMm;

  /// Nine sensors spread evenly over `arc_deg` centred on the pad side,
  /// S1 at -arc/2 and S9 at +arc/2, rays tilted `tilt_deg` toward the tip.
  static SensorRig arc(double ring_radius_mm, double arc_deg, double tilt_deg);
  void validate() const;
};

struct NoiseModel {
  double sigma_mm = 1.5;
  double dropout = 0.01;
  std::uint64_t seed = 0;

  static NoiseModel none() { return {0.0, 0.0, 0}; }
  void validate() const;
};

/// Posed hand: the 13 capsules rays can hit plus thumb landmarks.
struct PosedHand {
  std::array<Capsule, 13> scene; // 12 phalanges (pose order) + palm
  Vec3 thumb_mcp;                // start of the thumb proximal phalanx
  Vec3 thumb_axis;               // proximal phalanx direction
  Vec3 thumb_pad_normal;         // proximal phalanx pad side
  Vec3 thumb_pad_point;          // contact point on the distal pad
  std::array<Capsule, 3> thumb;  // metacarpal, proximal, distal (not ray targets)
};

PosedHand pose_hand(const HandConfig &hand, const JointAngles &angles);

/// Contact point on the surface of the phalanx a pose touches.
Vec3 contact_target(const PosedHand &posed, Pose pose);

struct RayGeometry {
  std::array<Vec3, kSensorCount> origins;
  std::array<Vec3, kSensorCount> directions;
};

/// World-space sensor rays for a posed hand and ring mount.
RayGeometry sensor_rays(const HandConfig &hand, const PosedHand &posed, const RingMount &mount,
                        const SensorRig &rig);

/// Noise-free distance along each ray to the nearest capsule; kNoTarget
/// past `limit_mm`.
std::array<double, kSensorCount> true_distances(const HandConfig &hand, const JointAngles &angles,
                                                const RingMount &mount, const SensorRig &rig,
                                                double limit_mm = kMaxRangeMm);

/// Raw (pre-clamp) readings with noise and dropout. Noise is drawn from a
/// stream keyed by (noise.seed, timestamp) so the call is pure.
std::array<double, kSensorCount> raycast_raw(const HandConfig &hand, const JointAngles &angles,
                                             const RingMount &mount, const SensorRig &rig,
                                             const NoiseModel &noise, std::int64_t timestamp_ms);

SensorFrame raycast_frame(const HandConfig &hand, const JointAngles &angles, const RingMount &mount,
                          const SensorRig &rig, const NoiseModel &noise, std::int64_t timestamp_ms);

// ---- sessions --------------------------------------------------------------

struct HandModel {
  HandConfig config;
  PoseAngles poses;
};

struct ScriptEntry {
  Pose pose = Pose::NoPose;
  int hold_ms = 0;
};

/// How consistently the simulated person performs poses.
struct Performance {
  double trial_jitter_deg = 0.0; // per prompt, thumb joints (fingers get half)
  double tremor_deg = 0.0;       // per frame, thumb joints
  bool operator==(const Performance &) const = default;
};

struct SessionOptions {
  double rate_hz = 10.0;
  int transition_ms = 800;
  std::int64_t start_ms = 0;
  Performance performance{};
  std::uint64_t motion_seed = 0;
};

struct SimulatedFrame {
  std::array<double, kSensorCount> raw{};
  SensorFrame frame;
  Pose label = Pose::NoPose; // ground truth
};

/// Incremental frame source: the hand moves toward the current target pose
/// over the transition time, then holds it. Frames are labelled NoPose while
/// moving and with the target once it is reached.
class Performer {
public:
  Performer(HandModel hand, RingMount mount, SensorRig rig, NoiseModel noise, const SessionOptions &options = {});

  /// Starts moving toward `pose` (with a fresh per-prompt variation).
  void set_target(Pose pose);
  Pose target() const { return target_pose_; }
  bool in_transition() const { return step_ < n_trans_; }

  void set_mount(const RingMount &mount) { mount_ = mount; }
  const RingMount &mount() const { return mount_; }

  /// Timestamp the next frame will carry.
  std::int64_t now() const;
  int frames_for(int ms) const;
  SimulatedFrame next();

private:
  HandModel hand_;
  RingMount mount_;
  SensorRig rig_;
  NoiseModel noise_;
  SessionOptions options_;
  double period_ms_;
  int n_trans_;
  Rng motion_;
  JointAngles from_, to_;
  Pose target_pose_ = Pose::NoPose;
  int step_;
  std::int64_t k_ = 0;
};

/// Each entry moves from the previous posture to the entry's pose over the
/// transition time (labelled NoPose), then holds for hold_ms.
std::vector<SimulatedFrame> simulate_session(std::span<const ScriptEntry> script, const HandModel &hand,
                                             const RingMount &mount, const SensorRig &rig,
                                             const NoiseModel &noise, const SessionOptions &options = {});

enum class RemountSeverity { Small, Medium, Large };

struct MountBounds {
  double axial_mm = 0.0;
  double rotation_deg = 0.0;
  static MountBounds for_severity(RemountSeverity s);
};

/// New mount drawn uniformly within the bounds around `mount`.
RingMount perturb_mount(const RingMount &mount, const MountBounds &bounds, Rng &rng);
RingMount perturb_mount(const RingMount &mount, RemountSeverity severity, Rng &rng);

double wrap_degrees(double deg);

// ---- pose table ------------------------------------------------------------

inline constexpr double kPoseReachToleranceMm = 5.0;

struct IkResult {
  ThumbAngles thumb;
  double error_mm = 0.0;
};

/// Finger postures used while the thumb touches `pose`.
std::array<FingerAngles, 4> finger_posture(Pose pose);

/// Grid search (then local refinement) over the thumb joints for the pad
/// point closest to the pose's contact target.
IkResult solve_thumb_ik(const HandConfig &hand, Pose pose);

/// Full table; throws Error(Config) if any pose misses by more than 5 mm.
PoseAngles solve_pose_table(const HandConfig &hand);

/// Open flat hand with the thumb swung away from the fingers.
JointAngles rest_posture();

// ---- configuration file ----------------------------------------------------

struct SimConfig {
  static constexpr int kFormatVersion = 1;
  HandConfig hand;
  PoseAngles poses;
  SensorRig rig;
  RingMount mount;
};

std::string to_json(const SimConfig &config);
SimConfig sim_config_from_json(const std::string &text);
SimConfig load_sim_config(const std::filesystem::path &path);

/// Built-in configuration (shipped pose table). Parsed once.
const SimConfig &default_sim_config();

} // namespace thumbtrak::sim
