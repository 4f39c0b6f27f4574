#pragma once

// Recorded sessions and their JSONL file format.
//
// One file per session: a header line, one line per prompt, then one line
// per frame. See docs/dataset.md.

#include "features.hpp"
#include "hand_sim.hpp"
#include "pose.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace thumbtrak {

enum class Phase { Train, Test, Calibration };

/// How the ring sat relative to the training mount when a test session
/// was recorded.
enum class Condition { InSession, Uncalibrated, Calibrated };

std::string to_string(Phase p);
std::string to_string(Condition c);
std::optional<Phase> phase_from_string(const std::string &s);
std::optional<Condition> condition_from_string(const std::string &s);

/// Stimulus shown during [start_ms, end_ms).
struct Prompt {
  Pose pose = Pose::NoPose;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  bool operator==(const Prompt &) const = default;
};

struct DatasetRecord {
  std::int64_t t_ms = 0;
  std::array<double, kSensorCount> raw{}; // pre-clamp; kNoTarget when nothing returned
  Pose label = Pose::NoPose;              // ground truth
  std::string session_id;
  std::string user_id;
  Phase phase = Phase::Train;
  bool recorded = false; // inside a prompt's recording second
  bool operator==(const DatasetRecord &) const = default;
};

/// Outcome of the remount calibration that preceded a calibrated session.
struct CalibrationSummary {
  int rounds = 0;
  bool converged = false;
  double average_offset_mm = 0.0;
  bool operator==(const CalibrationSummary &) const = default;
};

struct Session {
  static constexpr int kFormatVersion = 1;

  std::string user_id;
  std::string session_id;
  Phase phase = Phase::Train;
  Condition condition = Condition::InSession;
  sim::RingMount mount{};
  std::optional<CalibrationSummary> calibration;
  std::vector<Prompt> prompts;
  std::vector<DatasetRecord> records;

  SensorFrame frame(std::size_t i) const;
  std::vector<SensorFrame> frames() const;
  bool operator==(const Session &) const = default;
};

void write_session(std::ostream &out, const Session &s);
/// Throws ParseError naming the offending line.
Session read_session(std::istream &in);

void save_session(const Session &s, const std::filesystem::path &path);
Session load_session(const std::filesystem::path &path);

/// Every *.jsonl file under `root` (recursively, sorted by path), or the
/// single file when `root` is a file.
std::vector<Session> load_dataset(const std::filesystem::path &root);

/// Writes <root>/<user_id>/<session_id>.jsonl for each session.
void save_dataset(const std::vector<Session> &sessions, const std::filesystem::path &root);

/// Sessions of one user, grouped by role and sorted by session id.
struct UserData {
  std::string user_id;
  std::vector<Session> train;
  std::vector<Session> test;         // in-session
  std::vector<Session> uncalibrated; // after remounting
  std::vector<Session> calibrated;   // after remounting and calibrating
  std::vector<Session> calibration;  // calibration captures

  const std::vector<Session> &tests(Condition c) const;
};

std::vector<UserData> group_by_user(std::vector<Session> sessions);

} // namespace thumbtrak
