#include "service.hpp"

#include "errors.hpp"

#include <algorithm>

namespace thumbtrak {

using protocol::ClientMessage;
using protocol::Command;
using protocol::Mode;

ServiceHand study_participant(const sim::SimConfig &config, const StudyOptions &options, std::size_t index) {
  // Each fork advances the master stream, so earlier users have to be forked too.
  Rng master(options.seed);
  for (std::size_t u = 0; u < index; ++u)
    (void)master.fork(u);
  Rng rng = master.fork(index);
  return {make_user(config, index, options.variation, rng), config.rig};
}

SessionCore::SessionCore(Pipeline pipeline, ServiceHand hand, ServiceOptions options)
    : pipeline_(std::move(pipeline)), hand_(std::move(hand)), options_(options),
      recognizer_(pipeline_.recognizer), rng_(std::make_unique<Rng>(options.seed)) {
  pipeline_.validate();
}

SessionCore::SessionCore(Pipeline pipeline, Session recording, ServiceOptions options)
    : pipeline_(std::move(pipeline)), recording_(std::move(recording)), options_(options),
      recognizer_(pipeline_.recognizer), rng_(std::make_unique<Rng>(options.seed)) {
  pipeline_.validate();
}

std::vector<std::string> SessionCore::open() const { return {protocol::ready_message(kServiceVersion)}; }

std::vector<std::string> SessionCore::handle(std::string_view line) {
  ClientMessage m;
  try {
    m = protocol::parse_client_message(line);
  } catch (const ParseError &e) {
    return {protocol::error_message(e.what())};
  }
  switch (m.command) {
  case Command::Start:
    if (state_ != State::Idle)
      return {protocol::error_message("a session is already running")};
    return start(m);
  case Command::SetPose:
    if (state_ != State::Free)
      return {protocol::error_message("set_pose needs a free session")};
    return set_pose(m.pose);
  case Command::AdjustMount:
    if (state_ != State::Calibration)
      return {protocol::error_message("adjust_mount needs a calibration session")};
    return adjust_mount(m);
  case Command::Capture:
    if (state_ != State::Calibration)
      return {protocol::error_message("capture needs a calibration session")};
    return capture();
  case Command::Stop:
    if (state_ == State::Idle)
      return {protocol::error_message("no session is running")};
    return finish();
  }
  return {};
}

std::vector<std::string> SessionCore::start(const ClientMessage &m) {
  if (m.seed)
    rng_ = std::make_unique<Rng>(*m.seed);
  recognizer_ = Recognizer(pipeline_.recognizer);
  prompts_.clear();
  current_ = 0;
  correct_ = scored_ = 0;

  if (m.mode == Mode::Replay) {
    if (!recording_)
      return {protocol::error_message("no recording is loaded")};
    // Same stream offline scoring sees: the windows of prompts the model knows.
    const auto &classes = pipeline_.classifier.classes;
    replay_frames_.clear();
    replay_pos_ = 0;
    for (const auto &p : recording_->prompts) {
      if (std::find(classes.begin(), classes.end(), p.pose) == classes.end())
        continue;
      prompts_.push_back({p.pose, p.start_ms, p.end_ms});
      for (const auto &r : recording_->records)
        if (r.t_ms >= p.start_ms && r.t_ms < p.end_ms)
          replay_frames_.push_back(clamp_raw(r.raw, r.t_ms));
    }
    state_ = State::Replay;
    return {protocol::started_message(m.mode, prompts_.size())};
  }

  if (!hand_)
    return {protocol::error_message("live modes need a simulated hand")};
  const auto &user = hand_->user;
  sim::NoiseModel noise = options_.noise;
  noise.seed = rng_->next();
  sim::SessionOptions opt;
  opt.rate_hz = kStudyRateHz;
  opt.transition_ms = kTransitionMs;
  opt.performance = user.performance;
  opt.motion_seed = rng_->next();

  switch (m.mode) {
  case Mode::Study: {
    const int n = m.prompts > 0 ? m.prompts : options_.default_prompts;
    std::vector<Pose> order;
    while (order.size() < static_cast<std::size_t>(n)) {
      std::vector<Pose> round(kAllPoses.begin(), kAllPoses.end());
      rng_->shuffle(std::span<Pose>(round));
      order.insert(order.end(), round.begin(), round.end());
    }
    order.resize(static_cast<std::size_t>(n));
    const std::int64_t prompt_ms = 2 * kTransitionMs + kHoldMs + kRestMs;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto start = static_cast<std::int64_t>(i) * prompt_ms;
      prompts_.push_back({order[i], start, start + prompt_ms});
    }
    performer_ = std::make_unique<sim::Performer>(user.hand, user.mount, hand_->rig, noise, opt);
    state_ = State::Study;
    return {protocol::started_message(m.mode, prompts_.size())};
  }
  case Mode::Free:
    performer_ = std::make_unique<sim::Performer>(user.hand, user.mount, hand_->rig, noise, opt);
    state_ = State::Free;
    return {protocol::started_message(m.mode, 0)};
  case Mode::Calibration: {
    if (!reference_)
      reference_ = reference_from_capture(record_calibration_capture(
          user, hand_->rig, user.mount, "calib-reference", options_.capture_frames, options_.noise, *rng_));
    calibration_mount_ = sim::perturb_mount(user.mount, options_.calibration_remount, *rng_);
    calibration_round_ = 0;
    state_ = State::Calibration;
    return {protocol::started_message(m.mode, 0)};
  }
  case Mode::Replay:
    break;
  }
  return {};
}

std::vector<std::string> SessionCore::set_pose(Pose pose) {
  performer_->set_target(pose);
  return {protocol::ack_message(Command::SetPose)};
}

std::vector<std::string> SessionCore::adjust_mount(const ClientMessage &m) {
  const double max_axial = hand_->user.hand.config.thumb_proximal_length();
  const double axial = calibration_mount_.axial_mm + m.axial_mm;
  if (axial <= 0.0 || axial >= max_axial)
    return {protocol::error_message("the ring would slide off the proximal phalanx")};
  calibration_mount_.axial_mm = axial;
  calibration_mount_.rotation_deg = sim::wrap_degrees(calibration_mount_.rotation_deg + m.rotation_deg);
  return {protocol::ack_message(Command::AdjustMount)};
}

std::vector<std::string> SessionCore::capture() {
  const Session s = record_calibration_capture(hand_->user, hand_->rig, calibration_mount_, "calib",
                                               options_.capture_frames, options_.noise, *rng_);
  const CalibrationReport report = check(*reference_, reference_from_capture(s));
  ++calibration_round_;
  return {protocol::calibration_report_message(calibration_round_, report, guidance(report))};
}

std::vector<std::string> SessionCore::finish() {
  // Prompts cut short by stop are not scored.
  std::vector<std::string> out;
  performer_.reset();
  state_ = State::Idle;
  out.push_back(protocol::finished_message(correct_, scored_));
  return out;
}

void SessionCore::advance_prompts(std::vector<std::string> &out, std::int64_t t_ms) {
  while (current_ < prompts_.size() && prompts_[current_].end_ms <= t_ms) {
    auto &p = prompts_[current_];
    if (p.announced && !p.answered) {
      p.answered = true;
      ++scored_;
      out.push_back(protocol::feedback_message(current_, p.pose, protocol::Outcome::NoEmission, std::nullopt,
                                               p.end_ms));
    }
    ++current_;
  }
  if (current_ < prompts_.size() && !prompts_[current_].announced && prompts_[current_].start_ms <= t_ms) {
    auto &p = prompts_[current_];
    p.announced = true;
    out.push_back(protocol::stimulus_message(current_, prompts_.size(), p.pose, p.start_ms, p.end_ms));
  }
}

void SessionCore::on_frame(std::vector<std::string> &out, const SensorFrame &frame) {
  out.push_back(protocol::frame_message(frame));
  const auto event = recognizer_.step(frame, pipeline_);
  if (!event)
    return;
  out.push_back(protocol::event_message(*event));
  if (current_ >= prompts_.size())
    return;
  auto &p = prompts_[current_];
  if (p.answered || event->timestamp_ms < p.start_ms || event->timestamp_ms >= p.end_ms)
    return;
  p.answered = true;
  ++scored_;
  const bool match = event->label == p.pose;
  correct_ += match ? 1 : 0;
  out.push_back(protocol::feedback_message(current_, p.pose,
                                           match ? protocol::Outcome::Match : protocol::Outcome::Mismatch,
                                           event->label, event->timestamp_ms));
}

std::vector<std::string> SessionCore::tick() {
  std::vector<std::string> out;
  switch (state_) {
  case State::Replay: {
    if (replay_pos_ >= replay_frames_.size()) {
      advance_prompts(out, INT64_MAX);
      auto done = finish();
      out.insert(out.end(), done.begin(), done.end());
      break;
    }
    const SensorFrame &f = replay_frames_[replay_pos_++];
    advance_prompts(out, f.timestamp_ms);
    on_frame(out, f);
    break;
  }
  case State::Study: {
    const std::int64_t t = performer_->now();
    advance_prompts(out, t);
    if (current_ >= prompts_.size()) {
      auto done = finish();
      out.insert(out.end(), done.begin(), done.end());
      break;
    }
    const auto &p = prompts_[current_];
    if (t == p.start_ms)
      performer_->set_target(p.pose);
    else if (t == p.start_ms + kTransitionMs + kHoldMs)
      performer_->set_target(Pose::NoPose);
    on_frame(out, performer_->next().frame);
    break;
  }
  case State::Free:
    on_frame(out, performer_->next().frame);
    break;
  case State::Idle:
  case State::Calibration:
    break;
  }
  return out;
}

} // namespace thumbtrak
