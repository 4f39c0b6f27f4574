#include "study.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace thumbtrak {

using sim::ScriptEntry;

void StudyOptions::validate() const {
  if (users < 1 || users > 1000)
    throw Error(ErrorKind::Input, "user count must be in 1..1000");
  if (train_sessions < 1 || train_sessions > 20 || test_sessions < 0 || test_sessions > 20)
    throw Error(ErrorKind::Input, "session counts must be in 1..20 (training) and 0..20 (testing)");
  if (calibration_frames < static_cast<int>(kMinCalibrationFrames))
    throw Error(ErrorKind::Input, "calibration captures need at least 10 frames per pose");
  if (calibration_rounds < 0)
    throw Error(ErrorKind::Input, "calibration rounds must be non-negative");
  noise.validate();
}

SimulatedUser make_user(const sim::SimConfig &config, std::size_t index, const UserVariation &v, Rng &rng) {
  SimulatedUser u;
  char id[32];
  std::snprintf(id, sizeof id, "user%02zu", index);
  u.id = id;
  u.hand.config = config.hand;
  u.hand.config.scale = rng.uniform(v.min_scale, v.max_scale);
  u.hand.config.validate();
  u.hand.poses = config.poses;
  // Truncated at two sigma: larger offsets would lift the thumb off the
  // phalanx it is meant to touch.
  const auto style = [&] {
    double z;
    do {
      z = rng.normal();
    } while (std::abs(z) > 2.0);
    return z * v.style_deg;
  };
  for (Pose p : kAllPoses) {
    auto &t = u.hand.poses[index_of(p)].thumb;
    t.cmc_flex += style();
    t.cmc_abd += style();
    t.mcp_flex += style();
    t.ip_flex += style();
    u.hand.poses[index_of(p)] = sim::clamp_to_limits(u.hand.poses[index_of(p)]);
  }
  u.performance.trial_jitter_deg = rng.uniform(v.min_trial_jitter_deg, v.max_trial_jitter_deg);
  u.performance.tremor_deg = v.tremor_deg;
  u.mount = sim::perturb_mount(config.mount, sim::MountBounds{v.mount_axial_mm, v.mount_rotation_deg}, rng);
  return u;
}

std::vector<ScriptEntry> training_script(Rng &rng) {
  std::vector<ScriptEntry> s;
  for (int r = 0; r < kRepetitions; ++r)
    for (Pose p : kAllLabels)
      s.push_back({p, kHoldMs});
  rng.shuffle(std::span<ScriptEntry>(s));
  return s;
}

std::vector<ScriptEntry> testing_script(Rng &rng) {
  std::vector<Pose> order;
  for (int r = 0; r < kRepetitions; ++r)
    order.insert(order.end(), kAllPoses.begin(), kAllPoses.end());
  rng.shuffle(std::span<Pose>(order));
  std::vector<ScriptEntry> s;
  for (Pose p : order) {
    s.push_back({p, kHoldMs});
    s.push_back({Pose::NoPose, kRestMs});
  }
  return s;
}

namespace {

Session run_script(const SimulatedUser &user, const sim::SensorRig &rig, const sim::RingMount &mount,
                   const std::string &session_id, Phase phase, Condition condition,
                   const std::vector<ScriptEntry> &script, const sim::Performance &performance,
                   const sim::NoiseModel &noise, Rng &rng) {
  sim::NoiseModel n = noise;
  n.seed = rng.next();
  sim::SessionOptions opt;
  opt.rate_hz = kStudyRateHz;
  opt.transition_ms = kTransitionMs;
  opt.performance = performance;
  opt.motion_seed = rng.next();
  const auto frames = sim::simulate_session(script, user.hand, mount, rig, n, opt);

  Session s;
  s.user_id = user.id;
  s.session_id = session_id;
  s.phase = phase;
  s.condition = condition;
  s.mount = mount;
  s.records.reserve(frames.size());
  for (const auto &f : frames) {
    DatasetRecord r;
    r.t_ms = f.frame.timestamp_ms;
    r.raw = f.raw;
    r.label = f.label;
    r.session_id = session_id;
    r.user_id = user.id;
    r.phase = phase;
    s.records.push_back(std::move(r));
  }
  return s;
}

std::int64_t frame_ms() { return static_cast<std::int64_t>(1000.0 / kStudyRateHz); }

} // namespace

Session record_training_session(const SimulatedUser &user, const sim::SensorRig &rig, const sim::RingMount &mount,
                                const std::string &session_id, const sim::NoiseModel &noise, Rng &rng) {
  const auto script = training_script(rng);
  Session s = run_script(user, rig, mount, session_id, Phase::Train, Condition::InSession, script, user.performance,
                         noise, rng);
  const std::int64_t prompt_ms = kTransitionMs + kHoldMs;
  for (std::size_t i = 0; i < script.size(); ++i) {
    const std::int64_t start = static_cast<std::int64_t>(i) * prompt_ms;
    s.prompts.push_back({script[i].pose, start, start + prompt_ms});
  }
  const std::int64_t record_from = prompt_ms - kRecordFrames * frame_ms();
  for (auto &r : s.records)
    r.recorded = r.t_ms % prompt_ms >= record_from;
  return s;
}

Session record_testing_session(const SimulatedUser &user, const sim::SensorRig &rig, const sim::RingMount &mount,
                               const std::string &session_id, Condition condition, const sim::NoiseModel &noise,
                               Rng &rng) {
  const auto script = testing_script(rng);
  Session s =
      run_script(user, rig, mount, session_id, Phase::Test, condition, script, user.performance, noise, rng);
  const std::int64_t prompt_ms = 2 * kTransitionMs + kHoldMs + kRestMs;
  for (std::size_t i = 0; i < script.size(); i += 2) {
    const std::int64_t start = static_cast<std::int64_t>(i / 2) * prompt_ms;
    s.prompts.push_back({script[i].pose, start, start + prompt_ms});
  }
  return s;
}

Session record_calibration_capture(const SimulatedUser &user, const sim::SensorRig &rig, const sim::RingMount &mount,
                                   const std::string &session_id, int frames, const sim::NoiseModel &noise,
                                   Rng &rng) {
  const int hold = frames * static_cast<int>(frame_ms());
  const std::vector<ScriptEntry> script = {{kCalibrationPoses[0], hold}, {kCalibrationPoses[1], hold}};
  sim::Performance careful{0.0, user.performance.tremor_deg};
  Session s =
      run_script(user, rig, mount, session_id, Phase::Calibration, Condition::InSession, script, careful, noise, rng);
  const std::int64_t prompt_ms = kTransitionMs + hold;
  for (std::size_t i = 0; i < script.size(); ++i) {
    const std::int64_t start = static_cast<std::int64_t>(i) * prompt_ms;
    s.prompts.push_back({script[i].pose, start, start + prompt_ms});
  }
  for (auto &r : s.records)
    r.recorded = r.label != Pose::NoPose;
  return s;
}

CalibrationReference reference_from_capture(const Session &capture) {
  std::array<std::vector<SensorFrame>, 2> by_pose;
  for (std::size_t i = 0; i < capture.records.size(); ++i) {
    const auto &r = capture.records[i];
    if (!r.recorded)
      continue;
    for (std::size_t p = 0; p < kCalibrationPoses.size(); ++p)
      if (r.label == kCalibrationPoses[p])
        by_pose[p].push_back(capture.frame(i));
  }
  return capture_reference(by_pose[0], by_pose[1]);
}

CalibrationOutcome run_calibration_loop(const SimulatedUser &user, const sim::SensorRig &rig,
                                        const CalibrationReference &reference, const sim::RingMount &start,
                                        int frames, int max_rounds, const sim::NoiseModel &noise, Rng &rng) {
  const auto measure = [&](const sim::RingMount &m) {
    return check(reference, reference_from_capture(record_calibration_capture(user, rig, m, "calib", frames, noise, rng)));
  };
  const double max_axial = user.hand.config.thumb_proximal_length();

  CalibrationOutcome out;
  out.mount = start;
  out.report = measure(start);
  out.rounds.push_back({out.mount, out.report});
  double rot_step = 2.0, axial_step = 1.0;
  for (int round = 0; round < max_rounds && !out.report.pass; ++round) {
    const sim::RingMount candidates[] = {
        {out.mount.axial_mm, sim::wrap_degrees(out.mount.rotation_deg + rot_step), out.mount.tilt_deg},
        {out.mount.axial_mm, sim::wrap_degrees(out.mount.rotation_deg - rot_step), out.mount.tilt_deg},
        {out.mount.axial_mm + axial_step, out.mount.rotation_deg, out.mount.tilt_deg},
        {out.mount.axial_mm - axial_step, out.mount.rotation_deg, out.mount.tilt_deg},
    };
    bool improved = false;
    sim::RingMount best_mount = out.mount;
    CalibrationReport best = out.report;
    for (const auto &c : candidates) {
      if (c.axial_mm <= 0.0 || c.axial_mm >= max_axial)
        continue;
      const auto r = measure(c);
      if (r.average_offset < best.average_offset) {
        best = r;
        best_mount = c;
        improved = true;
      }
    }
    if (improved) {
      out.mount = best_mount;
      out.report = best;
    } else {
      rot_step /= 2.0;
      axial_step /= 2.0;
    }
    out.rounds.push_back({out.mount, out.report});
  }
  out.converged = out.report.pass;
  return out;
}

std::vector<Session> simulate_study(const sim::SimConfig &config, const StudyOptions &options) {
  options.validate();
  std::vector<Session> out;
  Rng master(options.seed);
  for (int u = 0; u < options.users; ++u) {
    Rng rng = master.fork(static_cast<std::uint64_t>(u));
    const SimulatedUser user = make_user(config, static_cast<std::size_t>(u), options.variation, rng);

    Session ref_capture = record_calibration_capture(user, config.rig, user.mount, "calib-reference",
                                                     options.calibration_frames, options.noise, rng);
    const CalibrationReference reference = reference_from_capture(ref_capture);
    out.push_back(std::move(ref_capture));

    for (int k = 1; k <= options.train_sessions; ++k)
      out.push_back(record_training_session(user, config.rig, user.mount, "train-" + std::to_string(k),
                                            options.noise, rng));
    for (int k = 1; k <= options.test_sessions; ++k)
      out.push_back(record_testing_session(user, config.rig, user.mount, "test-" + std::to_string(k),
                                           Condition::InSession, options.noise, rng));
    if (!options.cross_session)
      continue;

    const sim::RingMount remount = sim::perturb_mount(user.mount, options.remount, rng);
    out.push_back(record_calibration_capture(user, config.rig, remount, "calib-remount", options.calibration_frames,
                                             options.noise, rng));
    for (int k = 1; k <= options.test_sessions; ++k)
      out.push_back(record_testing_session(user, config.rig, remount, "uncal-" + std::to_string(k),
                                           Condition::Uncalibrated, options.noise, rng));
    const auto outcome = run_calibration_loop(user, config.rig, reference, remount, options.calibration_frames,
                                              options.calibration_rounds, options.noise, rng);
    for (int k = 1; k <= options.test_sessions; ++k) {
      Session s = record_testing_session(user, config.rig, outcome.mount, "cal-" + std::to_string(k),
                                         Condition::Calibrated, options.noise, rng);
      s.calibration = CalibrationSummary{static_cast<int>(outcome.rounds.size()) - 1, outcome.converged,
                                         outcome.report.average_offset};
      out.push_back(std::move(s));
    }
  }
  return out;
}

} // namespace thumbtrak
