#include "hand_sim.hpp"

#include "errors.hpp"
#include "file_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace thumbtrak::sim {

namespace {

constexpr Vec3 kZ{0.0, 0.0, 1.0};

// Thumb rest frame before any joint rotation.
const Vec3 kThumbAxis0 = normalized(Vec3{0.7, 0.7, 0.0});
constexpr double kThumbPadRoll0 = 30.0;
// Pronation that accompanies sweeping the thumb across the palm.
constexpr double kPronationPerFlex = 0.4;
// Where along the distal phalanx the pad touches.
constexpr double kPadFraction = 0.6;
// Raw sensor reports reach past the clamp range.
constexpr double kRawLimitMm = 255.0;

struct Range {
  double lo, hi;
  double clamp(double v) const { return std::clamp(v, lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

constexpr Range kFingerMcp{-20.0, 90.0};
constexpr Range kFingerAbd{-25.0, 25.0};
constexpr Range kFingerPip{0.0, 110.0};
constexpr Range kFingerDip{-5.0, 80.0};
constexpr Range kThumbCmcFlex{-45.0, 85.0};
constexpr Range kThumbCmcAbd{-15.0, 85.0};
constexpr Range kThumbMcp{-15.0, 75.0};
constexpr Range kThumbIp{-25.0, 90.0};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct ThumbChain {
  Vec3 cmc, mcp, ip, tip;
  Vec3 prox_axis, prox_pad;
  Vec3 pad_point;
};

ThumbChain thumb_chain(const HandConfig &hand, const ThumbAngles &t) {
  const double s = hand.scale;
  Vec3 u = kThumbAxis0;
  Vec3 n = rotate(kZ, u, deg2rad(kThumbPadRoll0));

  const double flex = deg2rad(t.cmc_flex);
  u = rotate(u, kZ, -flex);
  n = rotate(n, kZ, -flex);
  const Vec3 lift = normalized(cross(u, kZ));
  u = rotate(u, lift, deg2rad(t.cmc_abd));
  n = rotate(n, lift, deg2rad(t.cmc_abd));
  n = rotate(n, u, deg2rad(kPronationPerFlex * t.cmc_flex));

  ThumbChain c;
  c.cmc = hand.thumb_base * s;
  c.mcp = c.cmc + u * (hand.thumb_lengths[0] * s);

  Vec3 b = cross(u, n);
  const double m = deg2rad(t.mcp_flex);
  Vec3 u2 = rotate(u, b, m);
  Vec3 n2 = rotate(n, b, m);
  c.prox_axis = u2;
  c.prox_pad = n2;
  c.ip = c.mcp + u2 * (hand.thumb_lengths[1] * s);

  const double ip = deg2rad(t.ip_flex);
  const Vec3 u3 = rotate(u2, b, ip);
  const Vec3 n3 = rotate(n2, b, ip);
  c.tip = c.ip + u3 * (hand.thumb_lengths[2] * s);
  c.pad_point = c.ip + u3 * (kPadFraction * hand.thumb_lengths[2] * s) + n3 * (hand.thumb_radii[2] * s);
  return c;
}

struct FingerChain {
  std::array<Vec3, 4> joints; // mcp, pip, dip, tip
};

FingerChain finger_chain(const FingerGeometry &g, const FingerAngles &a, double s) {
  FingerChain c;
  c.joints[0] = g.base * s;
  const double psi = deg2rad(a.mcp_abd);
  const double flex[3] = {a.mcp_flex, a.mcp_flex + a.pip_flex, a.mcp_flex + a.pip_flex + a.dip_flex};
  for (int k = 0; k < 3; ++k) {
    const double th = deg2rad(flex[k]);
    const Vec3 d{std::cos(psi) * std::cos(th), std::sin(psi) * std::cos(th), std::sin(th)};
    c.joints[k + 1] = c.joints[k] + d * (g.lengths[k] * s);
  }
  return c;
}

} // namespace

// ---- configuration ---------------------------------------------------------

void HandConfig::validate() const {
  auto positive = [](double v, const char *what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::Config, std::string("hand configuration: ") + what + " must be positive");
  };
  for (const auto &f : fingers)
    for (int k = 0; k < 3; ++k) {
      positive(f.lengths[k], "finger segment length");
      positive(f.radii[k], "finger segment radius");
    }
  for (int k = 0; k < 3; ++k) {
    positive(thumb_lengths[k], "thumb segment length");
    positive(thumb_radii[k], "thumb segment radius");
  }
  positive(palm_radius, "palm radius");
  if (norm(palm_b - palm_a) <= 0.0)
    throw Error(ErrorKind::Config, "hand configuration: palm extent must be positive");
  if (!(scale >= kMinScale && scale <= kMaxScale))
    throw Error(ErrorKind::Config, "hand configuration: scale must lie in [0.7, 1.3]");
}

HandConfig HandConfig::reference() {
  HandConfig h;
  h.fingers[0] = {{92.0, 25.0, 0.0}, {40.0, 24.0, 19.0}, {9.5, 8.5, 7.5}};
  h.fingers[1] = {{95.0, 6.0, 0.0}, {45.0, 28.0, 20.0}, {10.0, 9.0, 8.0}};
  h.fingers[2] = {{91.0, -12.0, 0.0}, {42.0, 27.0, 20.0}, {9.5, 8.5, 7.5}};
  h.fingers[3] = {{84.0, -28.0, 0.0}, {33.0, 20.0, 18.0}, {8.5, 7.5, 6.5}};
  h.thumb_base = {25.0, 30.0, 22.0};
  h.thumb_lengths = {46.0, 33.0, 27.0};
  h.thumb_radii = {11.0, 10.0, 9.0};
  h.palm_a = {60.0, -26.0, -8.0};
  h.palm_b = {60.0, 24.0, -8.0};
  h.palm_radius = 20.0;
  h.scale = 1.0;
  return h;
}

JointAngles interpolate(const JointAngles &a, const JointAngles &b, double f) {
  auto lerp = [f](double x, double y) { return x + (y - x) * f; };
  JointAngles r;
  for (int i = 0; i < 4; ++i) {
    r.fingers[i].mcp_flex = lerp(a.fingers[i].mcp_flex, b.fingers[i].mcp_flex);
    r.fingers[i].mcp_abd = lerp(a.fingers[i].mcp_abd, b.fingers[i].mcp_abd);
    r.fingers[i].pip_flex = lerp(a.fingers[i].pip_flex, b.fingers[i].pip_flex);
    r.fingers[i].dip_flex = lerp(a.fingers[i].dip_flex, b.fingers[i].dip_flex);
  }
  r.thumb.cmc_flex = lerp(a.thumb.cmc_flex, b.thumb.cmc_flex);
  r.thumb.cmc_abd = lerp(a.thumb.cmc_abd, b.thumb.cmc_abd);
  r.thumb.mcp_flex = lerp(a.thumb.mcp_flex, b.thumb.mcp_flex);
  r.thumb.ip_flex = lerp(a.thumb.ip_flex, b.thumb.ip_flex);
  return r;
}

bool within_limits(const JointAngles &a) {
  for (const auto &f : a.fingers)
    if (!kFingerMcp.contains(f.mcp_flex) || !kFingerAbd.contains(f.mcp_abd) || !kFingerPip.contains(f.pip_flex) ||
        !kFingerDip.contains(f.dip_flex))
      return false;
  const auto &t = a.thumb;
  return kThumbCmcFlex.contains(t.cmc_flex) && kThumbCmcAbd.contains(t.cmc_abd) && kThumbMcp.contains(t.mcp_flex) &&
         kThumbIp.contains(t.ip_flex);
}

JointAngles clamp_to_limits(const JointAngles &a) {
  JointAngles r = a;
  for (auto &f : r.fingers) {
    f.mcp_flex = kFingerMcp.clamp(f.mcp_flex);
    f.mcp_abd = kFingerAbd.clamp(f.mcp_abd);
    f.pip_flex = kFingerPip.clamp(f.pip_flex);
    f.dip_flex = kFingerDip.clamp(f.dip_flex);
  }
  r.thumb.cmc_flex = kThumbCmcFlex.clamp(r.thumb.cmc_flex);
  r.thumb.cmc_abd = kThumbCmcAbd.clamp(r.thumb.cmc_abd);
  r.thumb.mcp_flex = kThumbMcp.clamp(r.thumb.mcp_flex);
  r.thumb.ip_flex = kThumbIp.clamp(r.thumb.ip_flex);
  return r;
}

SensorRig SensorRig::arc(double ring_radius_mm, double arc_deg, double tilt_deg) {
  SensorRig rig;
  const double tilt = deg2rad(tilt_deg);
  for (std::size_t i = 0; i < kSensorCount; ++i) {
    const double phi = deg2rad(-arc_deg / 2.0 + arc_deg * static_cast<double>(i) / (kSensorCount - 1));
    rig.origins[i] = {0.0, ring_radius_mm * std::cos(phi), ring_radius_mm * std::sin(phi)};
    rig.directions[i] = {std::sin(tilt), std::cos(tilt) * std::cos(phi), std::cos(tilt) * std::sin(phi)};
  }
  return rig;
}

void SensorRig::validate() const {
  for (const auto &d : directions)
    if (std::fabs(norm(d) - 1.0) > 1e-9)
      throw Error(ErrorKind::Config, "sensor rig: ray directions must be unit length");
  if (!(max_range_mm > 0.0))
    throw Error(ErrorKind::Config, "sensor rig: max range must be positive");
}

void NoiseModel::validate() const {
  if (!(sigma_mm >= 0.0))
    throw Error(ErrorKind::Config, "noise sigma must be non-negative");
  if (!(dropout >= 0.0 && dropout <= 1.0))
    throw Error(ErrorKind::Config, "dropout probability must lie in [0, 1]");
}

// ---- posing and ray casting --------------------------------------------------

PosedHand pose_hand(const HandConfig &hand, const JointAngles &angles) {
  const double s = hand.scale;
  PosedHand p;
  for (int f = 0; f < 4; ++f) {
    const auto &g = hand.fingers[f];
    const auto c = finger_chain(g, angles.fingers[f], s);
    for (int k = 0; k < 3; ++k) {
      // Scene order follows Pose: distal, middle, proximal per finger.
      const Pose pose = pose_of(static_cast<Finger>(f), static_cast<Phalanx>(2 - k));
      p.scene[index_of(pose)] = Capsule{c.joints[k], c.joints[k + 1], g.radii[k] * s};
    }
  }
  p.scene[12] = Capsule{hand.palm_a * s, hand.palm_b * s, hand.palm_radius * s};

  const auto t = thumb_chain(hand, angles.thumb);
  p.thumb_mcp = t.mcp;
  p.thumb_axis = t.prox_axis;
  p.thumb_pad_normal = t.prox_pad;
  p.thumb_pad_point = t.pad_point;
  p.thumb = {Capsule{t.cmc, t.mcp, hand.thumb_radii[0] * s}, Capsule{t.mcp, t.ip, hand.thumb_radii[1] * s},
             Capsule{t.ip, t.tip, hand.thumb_radii[2] * s}};
  return p;
}

Vec3 contact_target(const PosedHand &posed, Pose pose) {
  const auto &cap = posed.scene[index_of(pose)];
  // Reconstruct the palmar side from the capsule axis: the finger flexes in
  // the plane spanned by its axis and +z (abduction rotates that plane).
  const Vec3 axis = normalized(cap.b - cap.a);
  const Vec3 across = normalized(cross(kZ, axis));
  const Vec3 palmar = cross(axis, across);
  const Vec3 side = normalized(palmar + Vec3{0.0, 0.35, 0.0});
  return (cap.a + cap.b) * 0.5 + side * cap.radius;
}

RayGeometry sensor_rays(const HandConfig &hand, const PosedHand &posed, const RingMount &mount,
                        const SensorRig &rig) {
  const Vec3 ex = posed.thumb_axis;
  const Vec3 ey = posed.thumb_pad_normal;
  const Vec3 ez = cross(ex, ey);
  const Vec3 centre = posed.thumb_mcp + ex * mount.axial_mm;
  const double rot = deg2rad(mount.rotation_deg);
  const double tilt = deg2rad(mount.tilt_deg);
  const Vec3 lx{1.0, 0.0, 0.0}, lz{0.0, 0.0, 1.0};

  auto to_world = [&](Vec3 v) {
    v = rotate(v, lz, -tilt);
    v = rotate(v, lx, rot);
    return ex * v.x + ey * v.y + ez * v.z;
  };

  RayGeometry r;
  for (std::size_t i = 0; i < kSensorCount; ++i) {
    r.origins[i] = centre + to_world(rig.origins[i] * hand.scale);
    r.directions[i] = normalized(to_world(rig.directions[i]));
  }
  return r;
}

namespace {

void check_inputs(const HandConfig &hand, const JointAngles &angles, const RingMount &mount) {
  hand.validate();
  if (!within_limits(angles))
    throw Error(ErrorKind::Input, "joint angles outside anatomical limits");
  if (!(mount.axial_mm >= 0.0 && mount.axial_mm <= hand.thumb_proximal_length()))
    throw Error(ErrorKind::Config, "ring mount axial offset lies outside the thumb proximal phalanx");
}

std::array<double, kSensorCount> cast(const HandConfig &hand, const JointAngles &angles, const RingMount &mount,
                                      const SensorRig &rig, double limit) {
  const auto posed = pose_hand(hand, angles);
  const auto rays = sensor_rays(hand, posed, mount, rig);
  std::array<double, kSensorCount> out;
  for (std::size_t i = 0; i < kSensorCount; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto &cap : posed.scene)
      if (auto t = ray_hit(rays.origins[i], rays.directions[i], cap))
        best = std::min(best, *t);
    out[i] = best <= limit ? best : kNoTarget;
  }
  return out;
}

} // namespace

std::array<double, kSensorCount> true_distances(const HandConfig &hand, const JointAngles &angles,
                                                const RingMount &mount, const SensorRig &rig, double limit_mm) {
  check_inputs(hand, angles, mount);
  return cast(hand, angles, mount, rig, limit_mm);
}

std::array<double, kSensorCount> raycast_raw(const HandConfig &hand, const JointAngles &angles,
                                             const RingMount &mount, const SensorRig &rig, const NoiseModel &noise,
                                             std::int64_t timestamp_ms) {
  check_inputs(hand, angles, mount);
  noise.validate();
  auto d = cast(hand, angles, mount, rig, kRawLimitMm);
  if (noise.sigma_mm == 0.0 && noise.dropout == 0.0)
    return d;
  Rng rng(mix(noise.seed, static_cast<std::uint64_t>(timestamp_ms)));
  for (auto &v : d) {
    const bool drop = rng.bernoulli(noise.dropout);
    const double jitter = rng.normal(0.0, noise.sigma_mm);
    if (drop || v == kNoTarget)
      v = kNoTarget;
    else
      v = std::max(0.0, v + jitter);
  }
  return d;
}

SensorFrame raycast_frame(const HandConfig &hand, const JointAngles &angles, const RingMount &mount,
                          const SensorRig &rig, const NoiseModel &noise, std::int64_t timestamp_ms) {
  const auto raw = raycast_raw(hand, angles, mount, rig, noise, timestamp_ms);
  return clamp_raw(raw, timestamp_ms);
}

// ---- sessions --------------------------------------------------------------

namespace {

JointAngles jittered(const JointAngles &a, double sigma, Rng &rng) {
  JointAngles r = a;
  if (sigma <= 0.0)
    return r;
  for (auto &f : r.fingers) {
    f.mcp_flex += rng.normal(0.0, sigma / 2);
    f.pip_flex += rng.normal(0.0, sigma / 2);
    f.dip_flex += rng.normal(0.0, sigma / 2);
  }
  r.thumb.cmc_flex += rng.normal(0.0, sigma);
  r.thumb.cmc_abd += rng.normal(0.0, sigma);
  r.thumb.mcp_flex += rng.normal(0.0, sigma);
  r.thumb.ip_flex += rng.normal(0.0, sigma);
  return clamp_to_limits(r);
}

JointAngles with_tremor(const JointAngles &a, double sigma, Rng &rng) {
  if (sigma <= 0.0)
    return a;
  JointAngles r = a;
  r.thumb.cmc_flex += rng.normal(0.0, sigma);
  r.thumb.cmc_abd += rng.normal(0.0, sigma);
  r.thumb.mcp_flex += rng.normal(0.0, sigma);
  r.thumb.ip_flex += rng.normal(0.0, sigma);
  return clamp_to_limits(r);
}

} // namespace

Performer::Performer(HandModel hand, RingMount mount, SensorRig rig, NoiseModel noise, const SessionOptions &options)
    : hand_(std::move(hand)), mount_(mount), rig_(std::move(rig)), noise_(noise), options_(options),
      period_ms_(0.0), n_trans_(0), motion_(options.motion_seed) {
  if (!(options.rate_hz > 0.0))
    throw Error(ErrorKind::Input, "frame rate must be positive");
  if (options.transition_ms < 0)
    throw Error(ErrorKind::Input, "transition time must be non-negative");
  period_ms_ = 1000.0 / options.rate_hz;
  n_trans_ = frames_for(options.transition_ms);
  from_ = to_ = hand_.poses[index_of(Pose::NoPose)];
  step_ = n_trans_;
}

int Performer::frames_for(int ms) const { return static_cast<int>(std::lround(ms / period_ms_)); }

std::int64_t Performer::now() const {
  return options_.start_ms + static_cast<std::int64_t>(std::llround(static_cast<double>(k_) * period_ms_));
}

void Performer::set_target(Pose pose) {
  // Start from wherever the hand is now, even mid-transition.
  from_ = in_transition() && n_trans_ > 0 ? interpolate(from_, to_, static_cast<double>(step_) / n_trans_) : to_;
  to_ = jittered(hand_.poses[index_of(pose)], options_.performance.trial_jitter_deg, motion_);
  target_pose_ = pose;
  step_ = 0;
}

SimulatedFrame Performer::next() {
  JointAngles a = to_;
  Pose label = target_pose_;
  if (in_transition()) {
    ++step_;
    a = interpolate(from_, to_, static_cast<double>(step_) / n_trans_);
    label = Pose::NoPose;
  }
  const auto t = now();
  const auto posture = with_tremor(a, options_.performance.tremor_deg, motion_);
  SimulatedFrame f;
  f.raw = raycast_raw(hand_.config, posture, mount_, rig_, noise_, t);
  f.frame = clamp_raw(f.raw, t);
  f.label = label;
  ++k_;
  return f;
}

std::vector<SimulatedFrame> simulate_session(std::span<const ScriptEntry> script, const HandModel &hand,
                                             const RingMount &mount, const SensorRig &rig, const NoiseModel &noise,
                                             const SessionOptions &options) {
  std::vector<SimulatedFrame> out;
  if (script.empty())
    return out;
  Performer performer(hand, mount, rig, noise, options);
  for (const auto &entry : script) {
    performer.set_target(entry.pose);
    const int n = performer.frames_for(options.transition_ms) + performer.frames_for(entry.hold_ms);
    for (int j = 0; j < n; ++j)
      out.push_back(performer.next());
  }
  return out;
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0)
    r += 360.0;
  return r - 180.0;
}

MountBounds MountBounds::for_severity(RemountSeverity s) {
  switch (s) {
  case RemountSeverity::Small:
    return {1.0, 0.5};
  case RemountSeverity::Medium:
    return {3.0, 5.0};
  case RemountSeverity::Large:
    return {6.0, 12.0};
  }
  return {};
}

RingMount perturb_mount(const RingMount &mount, const MountBounds &bounds, Rng &rng) {
  RingMount m = mount;
  const double da = rng.uniform(-bounds.axial_mm, bounds.axial_mm);
  const double dr = rng.uniform(-bounds.rotation_deg, bounds.rotation_deg);
  if (bounds.axial_mm > 0.0)
    m.axial_mm += da;
  if (bounds.rotation_deg > 0.0)
    m.rotation_deg = wrap_degrees(m.rotation_deg + dr);
  return m;
}

RingMount perturb_mount(const RingMount &mount, RemountSeverity severity, Rng &rng) {
  return perturb_mount(mount, MountBounds::for_severity(severity), rng);
}

// ---- pose table ------------------------------------------------------------

std::array<FingerAngles, 4> finger_posture(Pose pose) {
  std::array<FingerAngles, 4> f{};
  if (pose == Pose::NoPose)
    return f;
  for (auto &a : f)
    a = {25.0, 0.0, 30.0, 15.0};
  // The touched finger curls further the closer the target is to its tip.
  constexpr std::array<FingerAngles, 3> kTouched = {{
      {55.0, 0.0, 60.0, 30.0}, // distal
      {65.0, 0.0, 45.0, 20.0}, // middle
      {55.0, 0.0, 45.0, 20.0}, // proximal
  }};
  f[static_cast<int>(finger_of(pose))] = kTouched[static_cast<int>(phalanx_of(pose))];
  return f;
}

JointAngles rest_posture() {
  JointAngles a;
  a.thumb = {-35.0, 10.0, 0.0, 0.0};
  return a;
}

namespace {

constexpr ThumbAngles kComfort{30.0, 30.0, 25.0, 20.0};
constexpr double kComfortWeight = 1e-4; // mm^2 per deg^2

// Soft tissue lets the thumb press this far into neighbouring capsules.
constexpr double kSoftTissueMm = 4.5;

// Squared depth by which the thumb metacarpal and proximal phalanx sink
// into the hand, sampled along their axes.
double penetration(const HandConfig &hand, const ThumbChain &c, const std::array<Capsule, 13> &scene) {
  double total = 0.0;
  const std::array<std::pair<Vec3, Vec3>, 2> bones = {{{c.cmc, c.mcp}, {c.mcp, c.ip}}};
  for (int b = 0; b < 2; ++b) {
    const double r = (hand.thumb_radii[b] - kSoftTissueMm) * hand.scale;
    for (int k = 1; k <= 6; ++k) {
      const Vec3 p = bones[b].first + (bones[b].second - bones[b].first) * (k / 6.0);
      for (const auto &cap : scene) {
        const double depth = r - signed_distance(p, cap);
        if (depth > 0.0)
          total += depth * depth;
      }
    }
  }
  return total;
}

constexpr double kPenetrationWeight = 1.0;

double ik_cost(const HandConfig &hand, const ThumbAngles &t, const Vec3 &target,
               const std::array<Capsule, 13> &scene) {
  const auto chain = thumb_chain(hand, t);
  const Vec3 d = chain.pad_point - target;
  const double dev = std::pow(t.cmc_flex - kComfort.cmc_flex, 2) + std::pow(t.cmc_abd - kComfort.cmc_abd, 2) +
                     std::pow(t.mcp_flex - kComfort.mcp_flex, 2) + std::pow(t.ip_flex - kComfort.ip_flex, 2);
  return dot(d, d) + kComfortWeight * dev + kPenetrationWeight * penetration(hand, chain, scene);
}

} // namespace

IkResult solve_thumb_ik(const HandConfig &hand, Pose pose) {
  if (pose == Pose::NoPose)
    throw Error(ErrorKind::Input, "no-pose has no contact target");
  JointAngles a;
  a.fingers = finger_posture(pose);
  const auto posed = pose_hand(hand, a);
  const Vec3 target = contact_target(posed, pose);

  ThumbAngles best{};
  double best_cost = std::numeric_limits<double>::infinity();
  constexpr double kStep = 5.0;
  for (double f = kThumbCmcFlex.lo; f <= kThumbCmcFlex.hi; f += kStep)
    for (double ab = kThumbCmcAbd.lo; ab <= kThumbCmcAbd.hi; ab += kStep)
      for (double m = kThumbMcp.lo; m <= kThumbMcp.hi; m += kStep)
        for (double ip = kThumbIp.lo; ip <= kThumbIp.hi; ip += kStep) {
          const ThumbAngles t{f, ab, m, ip};
          const double c = ik_cost(hand, t, target, posed.scene);
          if (c < best_cost) {
            best_cost = c;
            best = t;
          }
        }

  // Coordinate refinement on a shrinking step.
  const std::array<Range, 4> ranges{kThumbCmcFlex, kThumbCmcAbd, kThumbMcp, kThumbIp};
  for (double step = 2.5; step >= 0.05; step /= 2.0) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int j = 0; j < 4; ++j)
        for (double sign : {-1.0, 1.0}) {
          ThumbAngles t = best;
          double *field[4] = {&t.cmc_flex, &t.cmc_abd, &t.mcp_flex, &t.ip_flex};
          *field[j] = ranges[j].clamp(*field[j] + sign * step);
          const double c = ik_cost(hand, t, target, posed.scene);
          if (c < best_cost) {
            best_cost = c;
            best = t;
            improved = true;
          }
        }
    }
  }
  return {best, norm(thumb_chain(hand, best).pad_point - target)};
}

PoseAngles solve_pose_table(const HandConfig &hand) {
  hand.validate();
  PoseAngles table;
  for (Pose p : kAllPoses) {
    const auto ik = solve_thumb_ik(hand, p);
    if (ik.error_mm > kPoseReachToleranceMm)
      throw Error(ErrorKind::Config, "thumb cannot reach " + std::string(to_string(p)) + " (miss " +
                                         std::to_string(ik.error_mm) + " mm)");
    table[index_of(p)].fingers = finger_posture(p);
    table[index_of(p)].thumb = ik.thumb;
  }
  table[index_of(Pose::NoPose)] = rest_posture();
  return table;
}

// ---- configuration file ----------------------------------------------------

namespace {

using nlohmann::json;
constexpr const char *kConfigFormat = "thumbtrak-sim-config";
constexpr std::array<const char *, 4> kFingerNames = {"index", "middle", "ring", "little"};

json vec(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json &j) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError("expected a 3-element vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json angles_json(const JointAngles &a) {
  json fingers = json::array();
  for (const auto &f : a.fingers)
    fingers.push_back({{"mcp_flex", f.mcp_flex}, {"mcp_abd", f.mcp_abd}, {"pip_flex", f.pip_flex},
                       {"dip_flex", f.dip_flex}});
  return {{"thumb",
           {{"cmc_flex", a.thumb.cmc_flex},
            {"cmc_abd", a.thumb.cmc_abd},
            {"mcp_flex", a.thumb.mcp_flex},
            {"ip_flex", a.thumb.ip_flex}}},
          {"fingers", fingers}};
}

JointAngles angles_from(const json &j) {
  JointAngles a;
  const auto &t = j.at("thumb");
  a.thumb = {t.at("cmc_flex").get<double>(), t.at("cmc_abd").get<double>(), t.at("mcp_flex").get<double>(),
             t.at("ip_flex").get<double>()};
  const auto &fs = j.at("fingers");
  if (fs.size() != 4)
    throw ParseError("pose angles need four fingers");
  for (int i = 0; i < 4; ++i)
    a.fingers[i] = {fs[i].at("mcp_flex").get<double>(), fs[i].at("mcp_abd").get<double>(),
                    fs[i].at("pip_flex").get<double>(), fs[i].at("dip_flex").get<double>()};
  return a;
}

} // namespace

std::string to_json(const SimConfig &c) {
  json j;
  j["format"] = kConfigFormat;
  j["version"] = SimConfig::kFormatVersion;
  json fingers = json::array();
  for (int i = 0; i < 4; ++i) {
    const auto &f = c.hand.fingers[i];
    fingers.push_back({{"name", kFingerNames[i]}, {"base", vec(f.base)}, {"lengths", f.lengths}, {"radii", f.radii}});
  }
  j["hand"] = {{"scale", c.hand.scale},
               {"fingers", fingers},
               {"thumb",
                {{"base", vec(c.hand.thumb_base)}, {"lengths", c.hand.thumb_lengths}, {"radii", c.hand.thumb_radii}}},
               {"palm", {{"a", vec(c.hand.palm_a)}, {"b", vec(c.hand.palm_b)}, {"radius", c.hand.palm_radius}}}};
  json sensors = json::array();
  for (std::size_t i = 0; i < kSensorCount; ++i)
    sensors.push_back({{"name", "S" + std::to_string(i + 1)},
                       {"origin", vec(c.rig.origins[i])},
                       {"direction", vec(c.rig.directions[i])}});
  j["rig"] = {{"max_range_mm", c.rig.max_range_mm}, {"sensors", sensors}};
  j["mount"] = {{"axial_mm", c.mount.axial_mm}, {"rotation_deg", c.mount.rotation_deg}, {"tilt_deg", c.mount.tilt_deg}};
  json poses = json::object();
  for (Pose p : kAllLabels)
    poses[std::string(to_string(p))] = angles_json(c.poses[index_of(p)]);
  j["poses"] = poses;
  return j.dump(2);
}

SimConfig sim_config_from_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw ParseError(std::string("simulator config is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer())
    throw ParseError("simulator config has no integer 'version'");
  if (j["version"].get<int>() != SimConfig::kFormatVersion)
    throw Error(ErrorKind::Version, "unsupported simulator config version " + std::to_string(j["version"].get<int>()));
  try {
    if (j.at("format").get<std::string>() != kConfigFormat)
      throw ParseError("not a simulator config document");
    SimConfig c;
    const auto &h = j.at("hand");
    c.hand.scale = h.at("scale").get<double>();
    const auto &fs = h.at("fingers");
    if (fs.size() != 4)
      throw ParseError("hand needs four fingers");
    for (int i = 0; i < 4; ++i) {
      c.hand.fingers[i].base = vec_from(fs[i].at("base"));
      c.hand.fingers[i].lengths = fs[i].at("lengths").get<std::array<double, 3>>();
      c.hand.fingers[i].radii = fs[i].at("radii").get<std::array<double, 3>>();
    }
    c.hand.thumb_base = vec_from(h.at("thumb").at("base"));
    c.hand.thumb_lengths = h.at("thumb").at("lengths").get<std::array<double, 3>>();
    c.hand.thumb_radii = h.at("thumb").at("radii").get<std::array<double, 3>>();
    c.hand.palm_a = vec_from(h.at("palm").at("a"));
    c.hand.palm_b = vec_from(h.at("palm").at("b"));
    c.hand.palm_radius = h.at("palm").at("radius").get<double>();
    c.hand.validate();

    const auto &sensors = j.at("rig").at("sensors");
    if (sensors.size() != kSensorCount)
      throw ParseError("rig needs exactly nine sensors");
    c.rig.max_range_mm = j.at("rig").at("max_range_mm").get<double>();
    for (std::size_t i = 0; i < kSensorCount; ++i) {
      c.rig.origins[i] = vec_from(sensors[i].at("origin"));
      c.rig.directions[i] = vec_from(sensors[i].at("direction"));
    }
    c.rig.validate();

    const auto &m = j.at("mount");
    c.mount = {m.at("axial_mm").get<double>(), m.at("rotation_deg").get<double>(), m.at("tilt_deg").get<double>()};

    const auto &poses = j.at("poses");
    for (Pose p : kAllLabels) {
      const std::string name(to_string(p));
      if (!poses.contains(name))
        throw ParseError("pose table is missing '" + name + "'");
      c.poses[index_of(p)] = angles_from(poses.at(name));
      if (!within_limits(c.poses[index_of(p)]))
        throw Error(ErrorKind::Config, "pose '" + name + "' lies outside anatomical limits");
    }
    if (poses.size() != kLabelCount)
      throw ParseError("pose table must contain exactly 13 entries");
    return c;
  } catch (const json::exception &e) {
    throw ParseError(std::string("malformed simulator config: ") + e.what());
  }
}

SimConfig load_sim_config(const std::filesystem::path &path) { return sim_config_from_json(read_text_file(path)); }

} // namespace thumbtrak::sim
