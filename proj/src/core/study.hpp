#pragma once

// Simulated user study: per-user hands, the training/testing prompt scripts,
// calibration captures and the remount calibration loop.

#include "calibration.hpp"
#include "dataset.hpp"
#include "hand_sim.hpp"
#include "rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace thumbtrak {

inline constexpr int kTransitionMs = 800; // reaction time before a pose is held
inline constexpr int kHoldMs = 3200;      // so each prompt lasts 4 s
inline constexpr int kRestMs = 1200;      // testing: rest after each pose (2 s with its transition)
inline constexpr int kRecordFrames = 10;  // the final second of a training prompt
inline constexpr int kRepetitions = 5;    // per pose and session
inline constexpr double kStudyRateHz = 10.0;

/// Spread of the simulated participants.
struct UserVariation {
  double min_scale = 0.85;
  double max_scale = 1.15;
  double style_deg = 2.0;            // per-user offset of each pose's thumb joints (truncated at 2 sigma)
  double min_trial_jitter_deg = 0.3; // per-prompt variation, drawn per user
  double max_trial_jitter_deg = 0.6;
  double tremor_deg = 0.2;
  double mount_axial_mm = 1.0; // per-user deviation from the nominal mount
  double mount_rotation_deg = 3.0;
};

struct StudyOptions {
  int users = 10;
  int train_sessions = 3;
  int test_sessions = 2; // per condition
  bool cross_session = true;
  std::uint64_t seed = 42;
  sim::NoiseModel noise{}; // its seed is replaced per session
  sim::RemountSeverity remount = sim::RemountSeverity::Medium;
  UserVariation variation{};
  int calibration_frames = 30; // per pose and capture
  int calibration_rounds = 10;

  /// Throws Error(Input) on counts outside their ranges.
  void validate() const;
};

struct SimulatedUser {
  std::string id;
  sim::HandModel hand;
  sim::Performance performance;
  sim::RingMount mount; // training mount
};

SimulatedUser make_user(const sim::SimConfig &config, std::size_t index, const UserVariation &variation, Rng &rng);

/// 13 labels x 5, shuffled; each entry holds kHoldMs.
std::vector<sim::ScriptEntry> training_script(Rng &rng);

/// 12 poses x 5, shuffled; each pose is followed by a no-pose rest.
std::vector<sim::ScriptEntry> testing_script(Rng &rng);

Session record_training_session(const SimulatedUser &user, const sim::SensorRig &rig, const sim::RingMount &mount,
                                const std::string &session_id, const sim::NoiseModel &noise, Rng &rng);

Session record_testing_session(const SimulatedUser &user, const sim::SensorRig &rig, const sim::RingMount &mount,
                               const std::string &session_id, Condition condition, const sim::NoiseModel &noise,
                               Rng &rng);

/// Holds little-proximal then little-distal for `frames` frames each, with
/// no per-prompt jitter.
Session record_calibration_capture(const SimulatedUser &user, const sim::SensorRig &rig, const sim::RingMount &mount,
                                   const std::string &session_id, int frames, const sim::NoiseModel &noise,
                                   Rng &rng);

/// Median reference from a calibration capture's recorded frames.
CalibrationReference reference_from_capture(const Session &capture);

struct CalibrationRound {
  sim::RingMount mount;
  CalibrationReport report;
};

struct CalibrationOutcome {
  sim::RingMount mount;
  CalibrationReport report;
  std::vector<CalibrationRound> rounds; // the initial check, then one per adjustment
  bool converged = false;
};

/// Simulated researcher: checks the mount, and while the check fails tries
/// nudging rotation and axial position by the current step, keeps the best
/// improvement or halves the steps. Stops on a pass or after max_rounds
/// adjustments.
CalibrationOutcome run_calibration_loop(const SimulatedUser &user, const sim::SensorRig &rig,
                                        const CalibrationReference &reference, const sim::RingMount &start,
                                        int frames, int max_rounds, const sim::NoiseModel &noise, Rng &rng);

/// The whole study for every user: calibration reference, training and
/// in-session testing, then (optionally) a remount tested before and after
/// the calibration loop.
std::vector<Session> simulate_study(const sim::SimConfig &config, const StudyOptions &options);

} // namespace thumbtrak
