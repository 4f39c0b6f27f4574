#pragma once

// Shared fixtures: a small simulated study, built once per test binary.

#include "dataset.hpp"
#include "study.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace test_support {

inline const std::vector<thumbtrak::Session> &small_study_sessions() {
  static const std::vector<thumbtrak::Session> sessions = [] {
    thumbtrak::StudyOptions o;
    o.users = 2;
    o.seed = 42;
    return thumbtrak::simulate_study(thumbtrak::sim::default_sim_config(), o);
  }();
  return sessions;
}

inline const std::vector<thumbtrak::UserData> &small_study() {
  static const std::vector<thumbtrak::UserData> users = thumbtrak::group_by_user(small_study_sessions());
  return users;
}

/// Recorded training frames and labels of one user.
struct Training {
  std::vector<thumbtrak::SensorFrame> frames;
  std::vector<thumbtrak::Pose> labels;
};

inline Training recorded_training(const thumbtrak::UserData &user) {
  Training t;
  for (const auto &s : user.train)
    for (std::size_t i = 0; i < s.records.size(); ++i)
      if (s.records[i].recorded) {
        t.frames.push_back(s.frame(i));
        t.labels.push_back(s.records[i].label);
      }
  return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("thumbtrak-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }

private:
  std::filesystem::path path_;
};

} // namespace test_support
