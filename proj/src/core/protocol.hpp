#pragma once

// Newline-delimited JSON messages between the session service and a client.
// Every message is one JSON object with a "type" field; see docs/protocol.md.

#include "calibration.hpp"
#include "features.hpp"
#include "recognizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace thumbtrak::protocol {

enum class MessageType { Frame, Event, Stimulus, Feedback, CalibrationReport, SessionControl };

std::string to_string(MessageType t);
std::optional<MessageType> message_type_from_string(std::string_view s);

enum class Command { Start, SetPose, AdjustMount, Capture, Stop };

enum class Mode { Study, Calibration, Free, Replay };

std::string to_string(Mode m);

/// A client request. Clients only send session_control messages.
struct ClientMessage {
  Command command = Command::Stop;
  Mode mode = Mode::Study;        // start
  int prompts = 0;                // start: 0 keeps the server default
  std::optional<std::uint64_t> seed; // start
  Pose pose = Pose::NoPose;       // set_pose
  double rotation_deg = 0.0;      // adjust_mount, relative
  double axial_mm = 0.0;          // adjust_mount, relative
};

/// Throws ParseError on malformed JSON, a missing or unknown type, a type
/// clients may not send, or bad command fields. Unknown fields are ignored.
ClientMessage parse_client_message(std::string_view line);

enum class Outcome { Match, Mismatch, NoEmission };

std::string to_string(Outcome o);

std::string frame_message(const SensorFrame &frame);
std::string event_message(const GestureEvent &event);
std::string stimulus_message(std::size_t prompt, std::size_t total, Pose pose, std::int64_t start_ms,
                             std::int64_t deadline_ms);
std::string feedback_message(std::size_t prompt, Pose expected, Outcome outcome, std::optional<Pose> predicted,
                             std::int64_t t_ms);
std::string calibration_report_message(int round, const CalibrationReport &report, const CalibrationHint &hint);

std::string ready_message(std::string_view service_version);
std::string started_message(Mode mode, std::size_t prompts);
std::string ack_message(Command command);
std::string finished_message(int correct, int scored);
std::string error_message(std::string_view message);
std::string busy_message();

} // namespace thumbtrak::protocol
