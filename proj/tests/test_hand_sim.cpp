#include "errors.hpp"
#include "hand_sim.hpp"
#include "oracles/raymarch.hpp"
#include "study.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace thumbtrak;
using namespace thumbtrak::sim;

namespace {

oracle::P to_p(const Vec3 &v) { return {v.x, v.y, v.z}; }

const SimConfig &cfg() { return default_sim_config(); }

HandModel reference_model() { return {cfg().hand, cfg().poses}; }

JointAngles random_angles(Rng &rng) {
  JointAngles a;
  for (auto &f : a.fingers) {
    f.mcp_flex = rng.uniform(-30, 100);
    f.mcp_abd = rng.uniform(-30, 30);
    f.pip_flex = rng.uniform(-10, 120);
    f.dip_flex = rng.uniform(-10, 90);
  }
  a.thumb = {rng.uniform(-20, 100), rng.uniform(-30, 60), rng.uniform(-30, 70), rng.uniform(-30, 100)};
  return clamp_to_limits(a);
}

} // namespace

TEST(RayHit, PerpendicularCapsuleAtFortyMillimetres) {
  const Capsule c{{40, -20, 0}, {40, 20, 0}, 8.0};
  const auto d = ray_hit({0, 0, 0}, {1, 0, 0}, c);
  ASSERT_TRUE(d.has_value());
  EXPECT_NEAR(*d, 32.0, 1e-6);
}

TEST(RayHit, MissAndInside) {
  const Capsule c{{40, -20, 0}, {40, 20, 0}, 8.0};
  EXPECT_FALSE(ray_hit({0, 0, 0}, {-1, 0, 0}, c).has_value());
  EXPECT_FALSE(ray_hit({0, 0, 30}, {1, 0, 0}, c).has_value());
  const auto inside = ray_hit({40, 0, 1}, {1, 0, 0}, c);
  ASSERT_TRUE(inside.has_value());
  EXPECT_EQ(*inside, 0.0);
}

TEST(RayHit, AgreesWithRayMarchingOnRandomCapsules) {
  Rng rng(101);
  int hits = 0;
  for (int k = 0; k < 1000; ++k) {
    const Capsule c{{rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(10, 120)},
                    {rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(10, 120)},
                    rng.uniform(3, 12)};
    const Vec3 dir = normalized({rng.normal(), rng.normal(), 2.0 + rng.uniform()});
    const auto analytic = ray_hit({0, 0, 0}, dir, c);
    const oracle::Cap oc{to_p(c.a), to_p(c.b), c.radius};
    const auto marched = oracle::march({0, 0, 0}, to_p(dir), std::span(&oc, 1), 150.0);
    if (marched.hit) {
      ++hits;
      ASSERT_TRUE(analytic.has_value()) << k;
      ASSERT_NEAR(*analytic, *marched.hit, 0.2) << k;
    } else if (analytic && *analytic <= 150.0) {
      // Only a grazing ray may slip between the samples.
      ASSERT_LT(marched.min_sdf, 0.01) << k;
    }
  }
  EXPECT_GT(hits, 100);
}

TEST(Raycast, AgreesWithRayMarchingOnRandomHandScenes) {
  Rng rng(7);
  const auto &c = cfg();
  int compared = 0, grazing = 0;
  for (int k = 0; k < 1000; ++k) {
    const JointAngles angles = random_angles(rng);
    const RingMount mount{rng.uniform(6, 20), wrap_degrees(c.mount.rotation_deg + rng.uniform(-30, 30)),
                          rng.uniform(-5, 5)};
    const PosedHand posed = pose_hand(c.hand, angles);
    const RayGeometry rays = sensor_rays(c.hand, posed, mount, c.rig);
    const auto d = true_distances(c.hand, angles, mount, c.rig);

    std::vector<oracle::Cap> scene;
    for (const auto &cap : posed.scene)
      scene.push_back({to_p(cap.a), to_p(cap.b), cap.radius});
    for (std::size_t s = 0; s < kSensorCount; ++s) {
      const auto m = oracle::march(to_p(rays.origins[s]), to_p(rays.directions[s]), scene, 150.0);
      if (m.hit && *m.hit < 149.8) {
        ASSERT_NE(d[s], kNoTarget) << "scene " << k << " S" << s + 1;
        ASSERT_NEAR(d[s], *m.hit, 0.2) << "scene " << k << " S" << s + 1;
        ++compared;
      } else if (!m.hit && d[s] != kNoTarget) {
        ASSERT_LT(m.min_sdf, 0.01) << "scene " << k << " S" << s + 1;
        ++grazing;
      }
    }
  }
  EXPECT_GT(compared, 1000);
  EXPECT_LT(grazing, 20);
}

TEST(Raycast, OpenHandLeavesMostChannelsOutOfRange) {
  const auto &c = cfg();
  const auto f = raycast_frame(c.hand, c.poses[index_of(Pose::NoPose)], c.mount, c.rig, NoiseModel::none(), 0);
  int out = 0;
  for (bool o : f.out_of_range)
    out += o;
  EXPECT_GE(out, 5);
}

TEST(Raycast, EveryPoseHasInRangeChannels) {
  const auto &c = cfg();
  for (Pose p : kAllPoses) {
    const auto d = true_distances(c.hand, c.poses[index_of(p)], c.mount, c.rig);
    int in = 0;
    for (double v : d)
      in += v != kNoTarget;
    EXPECT_GE(in, 2) << to_string(p);
  }
}

TEST(Raycast, NoiseFreeFramesAreRepeatable) {
  const auto &c = cfg();
  for (Pose p : kAllLabels) {
    const auto a = raycast_frame(c.hand, c.poses[index_of(p)], c.mount, c.rig, NoiseModel::none(), 500);
    const auto b = raycast_frame(c.hand, c.poses[index_of(p)], c.mount, c.rig, NoiseModel::none(), 500);
    EXPECT_EQ(a, b);
  }
}

TEST(Raycast, NoisyFramesArePureInSeedAndTime) {
  const auto &c = cfg();
  const NoiseModel n{1.5, 0.01, 99};
  const auto &angles = c.poses[index_of(Pose::RingMiddle)];
  EXPECT_EQ(raycast_raw(c.hand, angles, c.mount, c.rig, n, 300), raycast_raw(c.hand, angles, c.mount, c.rig, n, 300));
  EXPECT_NE(raycast_raw(c.hand, angles, c.mount, c.rig, n, 300), raycast_raw(c.hand, angles, c.mount, c.rig, n, 400));
}

TEST(Raycast, FullDropoutLeavesEverythingOutOfRange) {
  const auto &c = cfg();
  const auto f = raycast_frame(c.hand, c.poses[0], c.mount, c.rig, NoiseModel{0.0, 1.0, 1}, 0);
  for (bool o : f.out_of_range)
    EXPECT_TRUE(o);
}

TEST(Raycast, ZeroLengthSegmentIsAConfigError) {
  auto hand = cfg().hand;
  hand.fingers[1].lengths[2] = 0.0;
  try {
    raycast_frame(hand, cfg().poses[0], cfg().mount, cfg().rig, NoiseModel::none(), 0);
    FAIL() << "expected a configuration error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Raycast, ReadingsAreContinuousInJointAngles) {
  const auto &c = cfg();
  Rng rng(3);
  // Distances jump where a ray slides off one surface onto another. Such
  // jumps must be rare and must vanish as the perturbation shrinks.
  const auto perturbed = [&](const JointAngles &a, double cmc, double mcp, std::size_t f, double pip, double scale) {
    JointAngles b = a;
    b.thumb.cmc_flex += cmc * scale;
    b.thumb.mcp_flex += mcp * scale;
    b.fingers[f].pip_flex += pip * scale;
    return true_distances(c.hand, clamp_to_limits(b), c.mount, c.rig); // some poses sit on a joint limit
  };
  int pairs = 0, jumps = 0;
  for (int k = 0; k < 200; ++k) {
    const Pose p = kAllPoses[rng.below(kPoseCount)];
    const JointAngles a = c.poses[index_of(p)];
    const auto base = true_distances(c.hand, a, c.mount, c.rig);
    const double cmc = rng.uniform(-0.1, 0.1), mcp = rng.uniform(-0.1, 0.1), pip = rng.uniform(-0.1, 0.1);
    const std::size_t f = rng.below(4);
    const auto moved = perturbed(a, cmc, mcp, f, pip, 1.0);
    const auto nudged = perturbed(a, cmc, mcp, f, pip, 1e-3);
    for (std::size_t s = 0; s < kSensorCount; ++s) {
      if (base[s] == kNoTarget || moved[s] == kNoTarget)
        continue; // range entry or exit
      ++pairs;
      if (std::fabs(base[s] - moved[s]) < 5.0)
        continue;
      ++jumps;
      ASSERT_NE(nudged[s], kNoTarget) << to_string(p) << " S" << s + 1;
      EXPECT_LT(std::fabs(base[s] - nudged[s]), 0.5) << to_string(p) << " S" << s + 1;
    }
  }
  EXPECT_GT(pairs, 500);
  EXPECT_LT(jumps, pairs / 20);
}

TEST(Simulate, ShortScriptFrameCounts) {
  const std::vector<ScriptEntry> script = {{Pose::IndexDistal, 1000}};
  SessionOptions opt;
  opt.rate_hz = 10.0;
  opt.transition_ms = 800;
  const auto frames = simulate_session(script, reference_model(), cfg().mount, cfg().rig, NoiseModel::none(), opt);
  ASSERT_EQ(frames.size(), 18u);
  for (std::size_t i = 0; i < 8; ++i)
    EXPECT_EQ(frames[i].label, Pose::NoPose);
  for (std::size_t i = 8; i < 18; ++i)
    EXPECT_EQ(frames[i].label, Pose::IndexDistal);
  for (std::size_t i = 0; i < frames.size(); ++i)
    EXPECT_EQ(frames[i].frame.timestamp_ms, static_cast<std::int64_t>(i) * 100);
}

TEST(Simulate, StudyTrainingSessionLength) {
  Rng rng(1);
  const auto script = training_script(rng);
  ASSERT_EQ(script.size(), 65u);
  const auto frames = simulate_session(script, reference_model(), cfg().mount, cfg().rig, NoiseModel{}, {});
  EXPECT_EQ(frames.size(), 2600u);
}

TEST(Simulate, EmptyScriptGivesNoFrames) {
  EXPECT_TRUE(simulate_session({}, reference_model(), cfg().mount, cfg().rig, NoiseModel{}, {}).empty());
}

TEST(Simulate, SameSeedSameFrames) {
  Rng r1(5), r2(5);
  const auto script = training_script(r1);
  EXPECT_EQ(script.size(), training_script(r2).size());
  SessionOptions opt;
  opt.performance = {0.5, 0.2};
  opt.motion_seed = 77;
  const NoiseModel n{1.5, 0.01, 12};
  const auto a = simulate_session(script, reference_model(), cfg().mount, cfg().rig, n, opt);
  const auto b = simulate_session(script, reference_model(), cfg().mount, cfg().rig, n, opt);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].raw, b[i].raw);
    ASSERT_EQ(a[i].label, b[i].label);
  }
  opt.motion_seed = 78;
  const auto c = simulate_session(script, reference_model(), cfg().mount, cfg().rig, n, opt);
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && !differs; ++i)
    differs = a[i].raw != c[i].raw;
  EXPECT_TRUE(differs);
}

TEST(Simulate, ReadingsStayInRangeAndFlagsMatch) {
  Rng rng(9);
  const auto script = testing_script(rng);
  const auto frames = simulate_session(script, reference_model(), cfg().mount, cfg().rig, NoiseModel{3.0, 0.05, 4}, {});
  for (const auto &f : frames)
    for (std::size_t s = 0; s < kSensorCount; ++s) {
      ASSERT_GE(f.frame.readings[s], 0.0);
      ASSERT_LE(f.frame.readings[s], 150.0);
      ASSERT_EQ(f.frame.out_of_range[s], f.frame.readings[s] == 150.0);
    }
}

TEST(Performer, MatchesSimulateSession) {
  const std::vector<ScriptEntry> script = {{Pose::RingMiddle, 1200}, {Pose::NoPose, 500}, {Pose::IndexDistal, 900}};
  SessionOptions opt;
  opt.performance = {0.4, 0.2};
  opt.motion_seed = 3;
  const NoiseModel n{1.5, 0.01, 8};
  const auto batch = simulate_session(script, reference_model(), cfg().mount, cfg().rig, n, opt);
  Performer p(reference_model(), cfg().mount, cfg().rig, n, opt);
  std::size_t i = 0;
  for (const auto &e : script) {
    p.set_target(e.pose);
    const int count = p.frames_for(opt.transition_ms + e.hold_ms);
    for (int k = 0; k < count; ++k, ++i) {
      const auto f = p.next();
      ASSERT_LT(i, batch.size());
      ASSERT_EQ(f.raw, batch[i].raw) << i;
      ASSERT_EQ(f.label, batch[i].label) << i;
    }
  }
  EXPECT_EQ(i, batch.size());
}

TEST(PerturbMount, SmallBounds) {
  Rng rng(42);
  const RingMount m = cfg().mount;
  for (int k = 0; k < 200; ++k) {
    const RingMount p = perturb_mount(m, RemountSeverity::Small, rng);
    EXPECT_LE(std::fabs(p.axial_mm - m.axial_mm), 1.0);
    EXPECT_LE(std::fabs(wrap_degrees(p.rotation_deg - m.rotation_deg)), 0.5);
  }
}

TEST(PerturbMount, LargeBoundsOverManyDraws) {
  Rng rng(1);
  const RingMount m = cfg().mount;
  double max_rot = 0.0, max_axial = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const RingMount p = perturb_mount(m, RemountSeverity::Large, rng);
    max_rot = std::max(max_rot, std::fabs(wrap_degrees(p.rotation_deg - m.rotation_deg)));
    max_axial = std::max(max_axial, std::fabs(p.axial_mm - m.axial_mm));
  }
  EXPECT_LE(max_rot, 12.0);
  EXPECT_LE(max_axial, 6.0);
  EXPECT_GT(max_rot, 10.0); // the draws do use the range
}

TEST(PerturbMount, ZeroBoundsAreIdentity) {
  Rng rng(3);
  const RingMount m = cfg().mount;
  EXPECT_EQ(perturb_mount(m, MountBounds{0.0, 0.0}, rng), m);
}

TEST(PerturbMount, OriginalUnchangedAndRotationWrapped) {
  Rng rng(3);
  const RingMount m{14.0, 179.9, 0.0};
  const RingMount copy = m;
  for (int k = 0; k < 100; ++k) {
    const RingMount p = perturb_mount(m, RemountSeverity::Medium, rng);
    EXPECT_GE(p.rotation_deg, -180.0);
    EXPECT_LT(p.rotation_deg, 180.0);
  }
  EXPECT_EQ(m, copy);
}

TEST(PoseTable, ShippedTableReachesEveryTarget) {
  const auto &c = cfg();
  for (Pose p : kAllPoses) {
    const auto &angles = c.poses[index_of(p)];
    EXPECT_TRUE(within_limits(angles)) << to_string(p);
    const PosedHand posed = pose_hand(c.hand, angles);
    EXPECT_LE(norm(posed.thumb_pad_point - contact_target(posed, p)), kPoseReachToleranceMm) << to_string(p);
  }
  EXPECT_TRUE(within_limits(c.poses[index_of(Pose::NoPose)]));
}

TEST(SimConfigFile, RoundTrip) {
  const auto &c = cfg();
  const SimConfig back = sim_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.poses, c.poses);
  EXPECT_EQ(back.mount, c.mount);
}

TEST(SimConfigFile, RejectsFutureVersion) {
  std::string text = to_json(cfg());
  const auto pos = text.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 12, "\"version\": 99");
  try {
    sim_config_from_json(text);
    FAIL() << "expected a version error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Version);
  }
}

TEST(SimConfigFile, RejectsMalformedText) {
  EXPECT_THROW(sim_config_from_json("{\"version\": 1"), Error);
  EXPECT_THROW(sim_config_from_json("[]"), Error);
}

TEST(HandConfigValidation, ScaleRange) {
  auto h = HandConfig::reference();
  h.scale = 0.69;
  EXPECT_THROW(h.validate(), Error);
  h.scale = 1.3;
  EXPECT_NO_THROW(h.validate());
  h.scale = 1.31;
  EXPECT_THROW(h.validate(), Error);
}

TEST(SensorRigLayout, UnitDirectionsAndNineSensors) {
  const auto rig = SensorRig::arc(12.0, 160.0, 60.0);
  EXPECT_NO_THROW(rig.validate());
  for (const auto &d : rig.directions)
    EXPECT_NEAR(norm(d), 1.0, 1e-12);
  auto bad = rig;
  bad.directions[0] = {2, 0, 0};
  EXPECT_THROW(bad.validate(), Error);
}
