#include "dataset.hpp"

#include "errors.hpp"
#include "json_codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace thumbtrak {

namespace {

using nlohmann::json;

constexpr const char *kDatasetFormat = "thumbtrak-dataset";

const char *const kPhaseNames[] = {"train", "test", "calibration"};
const char *const kConditionNames[] = {"in-session", "uncalibrated", "calibrated"};

} // namespace

std::string to_string(Phase p) { return kPhaseNames[static_cast<int>(p)]; }
std::string to_string(Condition c) { return kConditionNames[static_cast<int>(c)]; }

std::optional<Phase> phase_from_string(const std::string &s) {
  for (int i = 0; i < 3; ++i)
    if (s == kPhaseNames[i])
      return static_cast<Phase>(i);
  return std::nullopt;
}

std::optional<Condition> condition_from_string(const std::string &s) {
  for (int i = 0; i < 3; ++i)
    if (s == kConditionNames[i])
      return static_cast<Condition>(i);
  return std::nullopt;
}

SensorFrame Session::frame(std::size_t i) const { return clamp_raw(records.at(i).raw, records[i].t_ms); }

std::vector<SensorFrame> Session::frames() const {
  std::vector<SensorFrame> out;
  out.reserve(records.size());
  for (const auto &r : records)
    out.push_back(clamp_raw(r.raw, r.t_ms));
  return out;
}

void write_session(std::ostream &out, const Session &s) {
  json h;
  h["kind"] = "session";
  h["format"] = kDatasetFormat;
  h["version"] = Session::kFormatVersion;
  h["user_id"] = s.user_id;
  h["session_id"] = s.session_id;
  h["phase"] = to_string(s.phase);
  h["condition"] = to_string(s.condition);
  h["mount"] = {{"axial_mm", s.mount.axial_mm},
                {"rotation_deg", s.mount.rotation_deg},
                {"tilt_deg", s.mount.tilt_deg}};
  if (s.calibration)
    h["calibration"] = {{"rounds", s.calibration->rounds},
                        {"converged", s.calibration->converged},
                        {"average_offset_mm", s.calibration->average_offset_mm}};
  h["prompts"] = s.prompts.size();
  h["frames"] = s.records.size();
  out << h.dump() << '\n';

  for (std::size_t i = 0; i < s.prompts.size(); ++i) {
    const auto &p = s.prompts[i];
    json j{{"kind", "prompt"},
           {"index", i},
           {"pose", std::string(to_string(p.pose))},
           {"start_ms", p.start_ms},
           {"end_ms", p.end_ms}};
    out << j.dump() << '\n';
  }
  for (const auto &r : s.records) {
    json raw = json::array();
    for (double v : r.raw)
      raw.push_back(v == kNoTarget ? json(nullptr) : json(v));
    json j{{"kind", "frame"},
           {"t_ms", r.t_ms},
           {"raw", raw},
           {"label", std::string(to_string(r.label))},
           {"session_id", r.session_id},
           {"user_id", r.user_id},
           {"phase", to_string(r.phase)},
           {"recorded", r.recorded}};
    out << j.dump() << '\n';
  }
  if (!out)
    throw Error(ErrorKind::Io, "failed to write session " + s.session_id);
}

namespace {

template <typename T> T field(const json &j, const char *name, std::size_t line) {
  if (!j.contains(name))
    throw ParseError(std::string("missing field '") + name + "'", line);
  try {
    return j[name].get<T>();
  } catch (const json::exception &) {
    throw ParseError(std::string("field '") + name + "' has the wrong type", line);
  }
}

Pose pose_field(const json &j, const char *name, std::size_t line) {
  const auto s = field<std::string>(j, name, line);
  auto p = pose_from_string(s);
  if (!p)
    throw ParseError("unknown pose '" + s + "'", line);
  return *p;
}

} // namespace

Session read_session(std::istream &in) {
  Session s;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  std::size_t expected_prompts = 0, expected_frames = 0;

  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error &) {
      throw ParseError("not valid JSON", line);
    }
    if (!j.is_object())
      throw ParseError("expected a JSON object", line);
    const auto kind = field<std::string>(j, "kind", line);

    if (!have_header) {
      if (kind != "session")
        throw ParseError("first line must be the session header", line);
      if (field<std::string>(j, "format", line) != kDatasetFormat)
        throw ParseError("not a thumbtrak dataset", line);
      const int version = field<int>(j, "version", line);
      if (version != Session::kFormatVersion)
        throw Error(ErrorKind::Version, "line " + std::to_string(line) + ": unsupported dataset version " +
                                            std::to_string(version));
      s.user_id = field<std::string>(j, "user_id", line);
      s.session_id = field<std::string>(j, "session_id", line);
      const auto phase = phase_from_string(field<std::string>(j, "phase", line));
      if (!phase)
        throw ParseError("unknown phase", line);
      s.phase = *phase;
      const auto cond = condition_from_string(field<std::string>(j, "condition", line));
      if (!cond)
        throw ParseError("unknown condition", line);
      s.condition = *cond;
      const auto m = field<json>(j, "mount", line);
      s.mount = {field<double>(m, "axial_mm", line), field<double>(m, "rotation_deg", line),
                 field<double>(m, "tilt_deg", line)};
      if (j.contains("calibration")) {
        const auto &c = j["calibration"];
        s.calibration = CalibrationSummary{field<int>(c, "rounds", line), field<bool>(c, "converged", line),
                                           field<double>(c, "average_offset_mm", line)};
      }
      expected_prompts = field<std::size_t>(j, "prompts", line);
      expected_frames = field<std::size_t>(j, "frames", line);
      have_header = true;
      continue;
    }

    if (kind == "prompt") {
      Prompt p;
      p.pose = pose_field(j, "pose", line);
      p.start_ms = field<std::int64_t>(j, "start_ms", line);
      p.end_ms = field<std::int64_t>(j, "end_ms", line);
      if (p.end_ms <= p.start_ms)
        throw ParseError("prompt must end after it starts", line);
      if (!s.prompts.empty() && p.start_ms < s.prompts.back().end_ms)
        throw ParseError("prompts must be in order and must not overlap", line);
      if (field<std::size_t>(j, "index", line) != s.prompts.size())
        throw ParseError("prompt index out of sequence", line);
      s.prompts.push_back(p);
    } else if (kind == "frame") {
      DatasetRecord r;
      r.t_ms = field<std::int64_t>(j, "t_ms", line);
      if (!s.records.empty() && r.t_ms <= s.records.back().t_ms)
        throw ParseError("t_ms must be strictly increasing", line);
      const auto raw = field<json>(j, "raw", line);
      if (!raw.is_array() || raw.size() != kSensorCount)
        throw ParseError("raw must hold 9 readings", line);
      for (std::size_t c = 0; c < kSensorCount; ++c) {
        if (raw[c].is_null()) {
          r.raw[c] = kNoTarget;
        } else if (raw[c].is_number()) {
          r.raw[c] = raw[c].get<double>();
          if (!(r.raw[c] >= 0.0) || !std::isfinite(r.raw[c]))
            throw ParseError("raw reading must be a non-negative number or null", line);
        } else {
          throw ParseError("raw reading must be a number or null", line);
        }
      }
      r.label = pose_field(j, "label", line);
      r.session_id = field<std::string>(j, "session_id", line);
      r.user_id = field<std::string>(j, "user_id", line);
      if (r.session_id != s.session_id || r.user_id != s.user_id)
        throw ParseError("frame belongs to a different session", line);
      const auto phase = phase_from_string(field<std::string>(j, "phase", line));
      if (!phase || *phase != s.phase)
        throw ParseError("frame phase does not match the session", line);
      r.phase = *phase;
      r.recorded = field<bool>(j, "recorded", line);
      s.records.push_back(std::move(r));
    } else {
      throw ParseError("unknown line kind '" + kind + "'", line);
    }
  }
  if (!have_header)
    throw ParseError("empty dataset file");
  if (s.prompts.size() != expected_prompts || s.records.size() != expected_frames)
    throw ParseError("file is truncated: header announces " + std::to_string(expected_prompts) + " prompts and " +
                         std::to_string(expected_frames) + " frames",
                     line);
  return s;
}

void save_session(const Session &s, const std::filesystem::path &path) {
  std::ostringstream out;
  write_session(out, s);
  write_text_file(path, out.str());
}

Session load_session(const std::filesystem::path &path) {
  std::istringstream in(read_text_file(path));
  try {
    return read_session(in);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<Session> load_dataset(const std::filesystem::path &root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(root, ec))
    return {load_session(root)};
  if (!fs::is_directory(root, ec))
    throw Error(ErrorKind::Io, "dataset path not found: " + root.string());
  std::vector<fs::path> files;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".jsonl")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw Error(ErrorKind::Io, "no .jsonl files under " + root.string());
  std::vector<Session> out;
  for (const auto &f : files)
    out.push_back(load_session(f));
  return out;
}

void save_dataset(const std::vector<Session> &sessions, const std::filesystem::path &root) {
  for (const auto &s : sessions) {
    const auto dir = root / s.user_id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
      throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
    save_session(s, dir / (s.session_id + ".jsonl"));
  }
}

const std::vector<Session> &UserData::tests(Condition c) const {
  switch (c) {
  case Condition::Uncalibrated:
    return uncalibrated;
  case Condition::Calibrated:
    return calibrated;
  case Condition::InSession:
    break;
  }
  return test;
}

std::vector<UserData> group_by_user(std::vector<Session> sessions) {
  std::map<std::string, UserData> users;
  for (auto &s : sessions) {
    auto &u = users[s.user_id];
    u.user_id = s.user_id;
    if (s.phase == Phase::Train)
      u.train.push_back(std::move(s));
    else if (s.phase == Phase::Calibration)
      u.calibration.push_back(std::move(s));
    else
      (s.condition == Condition::InSession     ? u.test
       : s.condition == Condition::Uncalibrated ? u.uncalibrated
                                                : u.calibrated)
          .push_back(std::move(s));
  }
  std::vector<UserData> out;
  const auto by_id = [](const Session &a, const Session &b) { return a.session_id < b.session_id; };
  for (auto &[id, u] : users) {
    for (auto *v : {&u.train, &u.test, &u.uncalibrated, &u.calibrated, &u.calibration})
      std::sort(v->begin(), v->end(), by_id);
    out.push_back(std::move(u));
  }
  return out;
}

} // namespace thumbtrak
