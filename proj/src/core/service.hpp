#pragma once

// Interactive session: a state machine advanced by client messages and by
// frame ticks. It produces protocol lines and never touches a socket, so the
// same object drives the TCP server and tests.

#include "dataset.hpp"
#include "pipeline.hpp"
#include "protocol.hpp"
#include "study.hpp"

#include <memory>
#include <string_view>
#include <optional>
#include <string>
#include <vector>

namespace thumbtrak {

inline constexpr std::string_view kServiceVersion = "1";

struct ServiceOptions {
  std::uint64_t seed = 42;       // prompt order, noise and the calibration remount
  int default_prompts = 60;      // study sessions without an explicit count
  int capture_frames = 30;       // per pose and calibration round
  sim::NoiseModel noise{};
  sim::RemountSeverity calibration_remount = sim::RemountSeverity::Medium;
};

/// Simulated participant and rig the service performs with.
struct ServiceHand {
  SimulatedUser user;
  sim::SensorRig rig;
};

/// The user simulate_study would generate at `index` for this seed.
ServiceHand study_participant(const sim::SimConfig &config, const StudyOptions &options, std::size_t index);

class SessionCore {
public:
  enum class State { Idle, Study, Free, Calibration, Replay };

  /// Live session: frames come from the simulated hand, posed by the client.
  SessionCore(Pipeline pipeline, ServiceHand hand, ServiceOptions options = {});

  /// Replay session: frames and prompts come from a recorded session.
  SessionCore(Pipeline pipeline, Session recording, ServiceOptions options = {});

  /// Greeting sent when a client connects.
  std::vector<std::string> open() const;

  /// One client line in, zero or more lines out. Bad messages produce an
  /// error line and leave the state unchanged.
  std::vector<std::string> handle(std::string_view line);

  /// Advances one frame period when a frame-producing mode is active.
  std::vector<std::string> tick();

  State state() const { return state_; }
  bool ticking() const { return state_ == State::Study || state_ == State::Free || state_ == State::Replay; }
  int correct() const { return correct_; }
  int scored() const { return scored_; }

private:
  struct ActivePrompt {
    Pose pose;
    std::int64_t start_ms;
    std::int64_t end_ms;
    bool announced = false;
    bool answered = false;
  };

  std::vector<std::string> start(const protocol::ClientMessage &m);
  std::vector<std::string> set_pose(Pose pose);
  std::vector<std::string> adjust_mount(const protocol::ClientMessage &m);
  std::vector<std::string> capture();
  std::vector<std::string> finish();
  /// Closes prompts whose window ended before `t_ms` and announces the one
  /// that has started.
  void advance_prompts(std::vector<std::string> &out, std::int64_t t_ms);
  void on_frame(std::vector<std::string> &out, const SensorFrame &frame);

  Pipeline pipeline_;
  std::optional<ServiceHand> hand_;
  std::optional<Session> recording_;
  ServiceOptions options_;
  State state_ = State::Idle;

  std::unique_ptr<sim::Performer> performer_;
  Recognizer recognizer_;
  std::vector<ActivePrompt> prompts_;
  std::size_t current_ = 0;
  std::vector<SensorFrame> replay_frames_;
  std::size_t replay_pos_ = 0;
  int correct_ = 0;
  int scored_ = 0;

  std::optional<CalibrationReference> reference_;
  sim::RingMount calibration_mount_{};
  int calibration_round_ = 0;
  std::unique_ptr<Rng> rng_;
};

} // namespace thumbtrak
