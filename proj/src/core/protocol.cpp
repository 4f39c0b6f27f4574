#include "protocol.hpp"

#include "errors.hpp"

#include "json.hpp"

#include <cmath>

namespace thumbtrak::protocol {

namespace {

using nlohmann::json;

constexpr std::string_view kTypeNames[] = {"frame",    "event", "stimulus", "feedback", "calibration_report",
                                           "session_control"};
constexpr std::string_view kModeNames[] = {"study", "calibration", "free", "replay"};
constexpr std::string_view kOutcomeNames[] = {"match", "mismatch", "no-emission"};
constexpr std::string_view kCommandNames[] = {"start", "set_pose", "adjust_mount", "capture", "stop"};

json pose_or_null(std::optional<Pose> p) { return p ? json(std::string(to_string(*p))) : json(nullptr); }

double number_field(const json &j, const char *name) {
  if (!j.contains(name))
    return 0.0;
  if (!j[name].is_number())
    throw ParseError(std::string("'") + name + "' must be a number");
  const double v = j[name].get<double>();
  if (!std::isfinite(v))
    throw ParseError(std::string("'") + name + "' must be finite");
  return v;
}

} // namespace

std::string to_string(MessageType t) { return std::string(kTypeNames[static_cast<int>(t)]); }
std::string to_string(Mode m) { return std::string(kModeNames[static_cast<int>(m)]); }
std::string to_string(Outcome o) { return std::string(kOutcomeNames[static_cast<int>(o)]); }

std::optional<MessageType> message_type_from_string(std::string_view s) {
  for (int i = 0; i < 6; ++i)
    if (kTypeNames[i] == s)
      return static_cast<MessageType>(i);
  return std::nullopt;
}

ClientMessage parse_client_message(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error &) {
    throw ParseError("message is not valid JSON");
  }
  if (!j.is_object())
    throw ParseError("message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string())
    throw ParseError("message has no 'type'");
  const auto type_name = j["type"].get<std::string>();
  const auto type = message_type_from_string(type_name);
  if (!type)
    throw ParseError("unknown message type '" + type_name + "'");
  if (*type != MessageType::SessionControl)
    throw ParseError("clients may not send '" + type_name + "' messages");
  if (!j.contains("command") || !j["command"].is_string())
    throw ParseError("session_control message has no 'command'");

  const auto command = j["command"].get<std::string>();
  ClientMessage m;
  bool known = false;
  for (int i = 0; i < 5; ++i)
    if (kCommandNames[i] == command) {
      m.command = static_cast<Command>(i);
      known = true;
    }
  if (!known)
    throw ParseError("unknown command '" + command + "'");

  switch (m.command) {
  case Command::Start: {
    if (j.contains("mode")) {
      if (!j["mode"].is_string())
        throw ParseError("'mode' must be a string");
      const auto mode = j["mode"].get<std::string>();
      bool ok = false;
      for (int i = 0; i < 4; ++i)
        if (kModeNames[i] == mode) {
          m.mode = static_cast<Mode>(i);
          ok = true;
        }
      if (!ok)
        throw ParseError("unknown mode '" + mode + "'");
    }
    if (j.contains("prompts")) {
      if (!j["prompts"].is_number_integer() || j["prompts"].get<long long>() < 1 ||
          j["prompts"].get<long long>() > 1000)
        throw ParseError("'prompts' must be an integer in 1..1000");
      m.prompts = j["prompts"].get<int>();
    }
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned())
        throw ParseError("'seed' must be a non-negative integer");
      m.seed = j["seed"].get<std::uint64_t>();
    }
    break;
  }
  case Command::SetPose: {
    if (!j.contains("pose") || !j["pose"].is_string())
      throw ParseError("set_pose needs a 'pose'");
    const auto name = j["pose"].get<std::string>();
    const auto p = pose_from_string(name);
    if (!p)
      throw ParseError("unknown pose '" + name + "'");
    m.pose = *p;
    break;
  }
  case Command::AdjustMount:
    m.rotation_deg = number_field(j, "rotation_deg");
    m.axial_mm = number_field(j, "axial_mm");
    break;
  case Command::Capture:
  case Command::Stop:
    break;
  }
  return m;
}

std::string frame_message(const SensorFrame &f) {
  json j{{"type", "frame"}, {"t_ms", f.timestamp_ms}, {"readings", f.readings}, {"out_of_range", f.out_of_range}};
  return j.dump();
}

std::string event_message(const GestureEvent &e) {
  json tally = json::object();
  for (std::size_t i = 0; i < kPoseCount; ++i)
    if (e.tally[i])
      tally[std::string(to_string(static_cast<Pose>(i)))] = e.tally[i];
  json j{{"type", "event"}, {"label", std::string(to_string(e.label))}, {"t_ms", e.timestamp_ms}, {"tally", tally}};
  return j.dump();
}

std::string stimulus_message(std::size_t prompt, std::size_t total, Pose pose, std::int64_t start_ms,
                             std::int64_t deadline_ms) {
  json j{{"type", "stimulus"},          {"prompt", prompt},          {"total", total},
         {"pose", std::string(to_string(pose))}, {"start_ms", start_ms}, {"deadline_ms", deadline_ms}};
  return j.dump();
}

std::string feedback_message(std::size_t prompt, Pose expected, Outcome outcome, std::optional<Pose> predicted,
                             std::int64_t t_ms) {
  const char *color = outcome == Outcome::Match ? "green" : outcome == Outcome::Mismatch ? "blue" : "none";
  json j{{"type", "feedback"},
         {"prompt", prompt},
         {"expected", std::string(to_string(expected))},
         {"outcome", to_string(outcome)},
         {"match", outcome == Outcome::Match},
         {"predicted", pose_or_null(predicted)},
         {"color", color},
         {"t_ms", t_ms}};
  return j.dump();
}

std::string calibration_report_message(int round, const CalibrationReport &r, const CalibrationHint &hint) {
  json offsets = json::object();
  for (std::size_t p = 0; p < kCalibrationPoses.size(); ++p)
    offsets[std::string(to_string(kCalibrationPoses[p]))] = r.offsets[p];
  json j{{"type", "calibration_report"},
         {"round", round},
         {"offsets", offsets},
         {"average_offset_mm", r.average_offset},
         {"threshold_mm", kCalibrationThresholdMm},
         {"pass", r.pass},
         {"worst_sensor", r.worst_sensor + 1},
         {"worst_pose", std::string(to_string(kCalibrationPoses[r.worst_pose]))},
         {"hint", {{"adjust", hint.adjust},
                   {"sensor", hint.sensor},
                   {"direction", to_string(hint.direction)},
                   {"text", hint.text()}}}};
  return j.dump();
}

std::string ready_message(std::string_view service_version) {
  return json{{"type", "session_control"}, {"status", "ready"}, {"version", service_version}}.dump();
}

std::string started_message(Mode mode, std::size_t prompts) {
  return json{{"type", "session_control"}, {"status", "started"}, {"mode", to_string(mode)}, {"prompts", prompts}}
      .dump();
}

std::string ack_message(Command command) {
  return json{{"type", "session_control"}, {"status", "ok"}, {"command", kCommandNames[static_cast<int>(command)]}}
      .dump();
}

std::string finished_message(int correct, int scored) {
  return json{{"type", "session_control"}, {"status", "finished"}, {"correct", correct}, {"scored", scored}}.dump();
}

std::string error_message(std::string_view message) {
  return json{{"type", "session_control"}, {"status", "error"}, {"message", message}}.dump();
}

std::string busy_message() {
  return json{{"type", "session_control"},
              {"status", "busy"},
              {"message", "another session is active; try again later"}}
      .dump();
}

} // namespace thumbtrak::protocol
