#pragma once

// Real-time event recognizer: a sliding window over per-frame classifier
// labels with one-shot emission and a no-pose reset.

#include "features.hpp"
#include "pose.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace thumbtrak {

class Pipeline;

/// Frame counts (not wall-clock) are authoritative; at 10 Hz the defaults
/// are a 1.5 s window, a 1 s vote and a 0.5 s reset.
struct RecognizerConfig {
  int window = 15; // consecutive pose frames needed before emitting
  int vote = 10;   // trailing frames of the window that vote
  int reset = 5;   // consecutive no-pose frames that re-arm

  /// Throws Error(Input) unless 1 <= vote <= window and reset >= 1.
  void validate() const;
  bool operator==(const RecognizerConfig &) const = default;
};

struct GestureEvent {
  Pose label = Pose::NoPose;
  std::int64_t timestamp_ms = 0;
  std::array<int, kPoseCount> tally{}; // votes per pose, sums to the vote size
  bool operator==(const GestureEvent &) const = default;
};

struct RecognizerState {
  std::deque<Pose> window;
  int noise_run = 0;
  bool armed = true;
  bool operator==(const RecognizerState &) const = default;
};

/// Per-frame decision: a pose label, or nullopt when the segmenter says
/// no pose.
using FrameDecision = std::optional<Pose>;

class Recognizer {
public:
  explicit Recognizer(RecognizerConfig config = {});

  /// Advances the state machine by one decision.
  std::optional<GestureEvent> step(FrameDecision decision, std::int64_t timestamp_ms);

  /// Classifies the frame with `pipeline`, then steps.
  std::optional<GestureEvent> step(const SensorFrame &frame, const Pipeline &pipeline);

  const RecognizerState &state() const { return state_; }
  const RecognizerConfig &config() const { return config_; }
  void reset() { state_ = {}; }

private:
  GestureEvent vote(std::int64_t timestamp_ms) const;

  RecognizerConfig config_;
  RecognizerState state_;
};

/// Folds step over a stream from the initial (armed, empty) state.
std::vector<GestureEvent> run_stream(std::span<const SensorFrame> frames, const Pipeline &pipeline,
                                     const RecognizerConfig &config = {});

/// Same fold over precomputed decisions; frame i gets timestamp i unless
/// timestamps are supplied.
std::vector<GestureEvent> run_decisions(std::span<const FrameDecision> decisions,
                                        const RecognizerConfig &config = {},
                                        std::span<const std::int64_t> timestamps = {});

} // namespace thumbtrak
