#include "recognizer.hpp"

#include "errors.hpp"
#include "pipeline.hpp"

namespace thumbtrak {

void RecognizerConfig::validate() const {
  if (window < 1 || vote < 1 || vote > window)
    throw Error(ErrorKind::Input, "recognizer needs 1 <= vote <= window");
  if (reset < 1)
    throw Error(ErrorKind::Input, "recognizer reset count must be at least 1");
}

Recognizer::Recognizer(RecognizerConfig config) : config_(config) { config_.validate(); }

std::optional<GestureEvent> Recognizer::step(FrameDecision decision, std::int64_t timestamp_ms) {
  if (!decision || *decision == Pose::NoPose) {
    state_.window.clear();
    if (state_.noise_run < config_.reset)
      ++state_.noise_run;
    if (state_.noise_run >= config_.reset)
      state_.armed = true;
    return std::nullopt;
  }
  state_.noise_run = 0;
  state_.window.push_back(*decision);
  if (state_.window.size() > static_cast<std::size_t>(config_.window))
    state_.window.pop_front();
  if (!state_.armed || state_.window.size() < static_cast<std::size_t>(config_.window))
    return std::nullopt;
  GestureEvent ev = vote(timestamp_ms);
  state_.armed = false;
  state_.window.clear();
  return ev;
}

std::optional<GestureEvent> Recognizer::step(const SensorFrame &frame, const Pipeline &pipeline) {
  return step(pipeline.decide(frame), frame.timestamp_ms);
}

GestureEvent Recognizer::vote(std::int64_t timestamp_ms) const {
  GestureEvent ev;
  ev.timestamp_ms = timestamp_ms;
  std::array<int, kPoseCount> last_seen{};
  last_seen.fill(-1);
  const std::size_t first = state_.window.size() - static_cast<std::size_t>(config_.vote);
  for (std::size_t i = first; i < state_.window.size(); ++i) {
    const auto k = index_of(state_.window[i]);
    ++ev.tally[k];
    last_seen[k] = static_cast<int>(i);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < kPoseCount; ++k) {
    if (ev.tally[k] > ev.tally[best] || (ev.tally[k] == ev.tally[best] && last_seen[k] > last_seen[best]))
      best = k;
  }
  ev.label = static_cast<Pose>(best);
  return ev;
}

std::vector<GestureEvent> run_stream(std::span<const SensorFrame> frames, const Pipeline &pipeline,
                                     const RecognizerConfig &config) {
  Recognizer rec(config);
  std::vector<GestureEvent> out;
  for (const auto &f : frames)
    if (auto ev = rec.step(f, pipeline))
      out.push_back(*ev);
  return out;
}

std::vector<GestureEvent> run_decisions(std::span<const FrameDecision> decisions, const RecognizerConfig &config,
                                        std::span<const std::int64_t> timestamps) {
  if (!timestamps.empty() && timestamps.size() != decisions.size())
    throw Error(ErrorKind::Input, "one timestamp per decision is required");
  Recognizer rec(config);
  std::vector<GestureEvent> out;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto t = timestamps.empty() ? static_cast<std::int64_t>(i) : timestamps[i];
    if (auto ev = rec.step(decisions[i], t))
      out.push_back(*ev);
  }
  return out;
}

} // namespace thumbtrak
