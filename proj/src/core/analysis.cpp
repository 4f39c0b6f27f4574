#include "analysis.hpp"

#include "errors.hpp"
#include "rng.hpp"
#include "study.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace thumbtrak {

// ---- confusion matrix ------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(std::vector<Pose> labels)
    : labels_(std::move(labels)), counts_(labels_.size(), std::vector<int>(labels_.size(), 0)),
      no_emission_(labels_.size(), 0) {}

std::size_t ConfusionMatrix::slot(Pose p) const {
  const auto it = std::find(labels_.begin(), labels_.end(), p);
  if (it == labels_.end())
    throw Error(ErrorKind::Input, "pose " + std::string(to_string(p)) + " is not in the confusion matrix");
  return static_cast<std::size_t>(it - labels_.begin());
}

void ConfusionMatrix::add(Pose truth, std::optional<Pose> predicted) {
  const auto r = slot(truth);
  if (predicted)
    ++counts_[r][slot(*predicted)];
  else
    ++no_emission_[r];
}

void ConfusionMatrix::merge(const ConfusionMatrix &other) {
  for (std::size_t r = 0; r < other.labels_.size(); ++r) {
    const auto rr = slot(other.labels_[r]);
    no_emission_[rr] += other.no_emission_[r];
    for (std::size_t c = 0; c < other.labels_.size(); ++c)
      counts_[rr][slot(other.labels_[c])] += other.counts_[r][c];
  }
}

int ConfusionMatrix::count(Pose truth, Pose predicted) const { return counts_[slot(truth)][slot(predicted)]; }
int ConfusionMatrix::no_emission(Pose truth) const { return no_emission_[slot(truth)]; }

int ConfusionMatrix::row_total(Pose truth) const {
  const auto r = slot(truth);
  int n = no_emission_[r];
  for (int c : counts_[r])
    n += c;
  return n;
}

int ConfusionMatrix::total() const {
  int n = 0;
  for (Pose p : labels_)
    n += row_total(p);
  return n;
}

int ConfusionMatrix::correct() const {
  int n = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    n += counts_[i][i];
  return n;
}

int ConfusionMatrix::missed() const {
  int n = 0;
  for (int m : no_emission_)
    n += m;
  return n;
}

double ConfusionMatrix::accuracy() const {
  const int t = total();
  return t ? static_cast<double>(correct()) / t : 0.0;
}

double ConfusionMatrix::class_accuracy(Pose truth) const {
  const int t = row_total(truth);
  return t ? static_cast<double>(counts_[slot(truth)][slot(truth)]) / t : 0.0;
}

double ConfusionMatrix::phalanx_accuracy(Phalanx ph) const {
  int hit = 0, all = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (phalanx_of(labels_[i]) != ph)
      continue;
    hit += counts_[i][i];
    all += row_total(labels_[i]);
  }
  return all ? static_cast<double>(hit) / all : 0.0;
}

// ---- helpers ---------------------------------------------------------------

namespace {

/// Runs fn(i) for i in [0, n) on a small thread pool. The first exception
/// is rethrown after all workers finish.
template <typename Fn> void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure)
          failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(work);
  }
  if (failure)
    std::rethrow_exception(failure);
}

std::vector<Pose> matrix_labels(const Pipeline &p) { return p.classifier.classes; }

} // namespace

// ---- training and scoring --------------------------------------------------

Pipeline train_user(const UserData &user, const EvalConfig &config) {
  if (config.train_sessions < 0)
    throw Error(ErrorKind::Input, "training session count must be positive");
  const std::size_t n = config.train_sessions == 0 ? user.train.size() : static_cast<std::size_t>(config.train_sessions);
  if (n == 0)
    throw Error(ErrorKind::Training, user.user_id + " has no training sessions");
  if (n > user.train.size())
    throw Error(ErrorKind::Input, user.user_id + " has " + std::to_string(user.train.size()) +
                                      " training sessions, " + std::to_string(n) + " requested");

  std::vector<SensorFrame> frames;
  std::vector<Pose> labels;
  for (std::size_t s = 0; s < n; ++s) {
    const auto &session = user.train[s];
    for (std::size_t i = 0; i < session.records.size(); ++i) {
      if (!session.records[i].recorded)
        continue;
      frames.push_back(session.frame(i));
      labels.push_back(session.records[i].label);
    }
  }
  if (config.shuffle_labels_seed) {
    std::vector<std::size_t> idx;
    std::vector<Pose> pose_labels;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] != Pose::NoPose) {
        idx.push_back(i);
        pose_labels.push_back(labels[i]);
      }
    Rng rng(*config.shuffle_labels_seed);
    rng.shuffle(std::span<Pose>(pose_labels));
    for (std::size_t k = 0; k < idx.size(); ++k)
      labels[idx[k]] = pose_labels[k];
  }

  Pipeline p;
  try {
    p = train_pipeline(frames, labels, config.pipeline);
  } catch (const Error &e) {
    throw Error(e.kind(), user.user_id + ": " + e.what());
  }
  for (const auto &c : user.calibration)
    if (c.session_id == "calib-reference")
      p.calibration = reference_from_capture(c);
  return p;
}

std::vector<PromptOutcome> score_session(const Session &session, const Pipeline &pipeline) {
  const auto &classes = pipeline.classifier.classes;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < session.prompts.size(); ++i)
    if (std::find(classes.begin(), classes.end(), session.prompts[i].pose) != classes.end())
      kept.push_back(i);

  std::vector<SensorFrame> frames;
  for (std::size_t k : kept) {
    const auto &p = session.prompts[k];
    const auto first = std::lower_bound(session.records.begin(), session.records.end(), p.start_ms,
                                        [](const DatasetRecord &r, std::int64_t t) { return r.t_ms < t; });
    for (auto it = first; it != session.records.end() && it->t_ms < p.end_ms; ++it)
      frames.push_back(clamp_raw(it->raw, it->t_ms));
  }

  std::vector<PromptOutcome> out;
  for (std::size_t k : kept)
    out.push_back({session.user_id, session.session_id, k, session.prompts[k].pose, std::nullopt, -1});
  for (const auto &ev : run_stream(frames, pipeline, pipeline.recognizer)) {
    const auto it = std::upper_bound(kept.begin(), kept.end(), ev.timestamp_ms, [&](std::int64_t t, std::size_t k) {
      return t < session.prompts[k].start_ms;
    });
    if (it == kept.begin())
      continue;
    const auto slot = static_cast<std::size_t>(it - kept.begin()) - 1;
    if (ev.timestamp_ms >= session.prompts[kept[slot]].end_ms || out[slot].predicted)
      continue;
    out[slot].predicted = ev.label;
    out[slot].event_ms = ev.timestamp_ms;
  }
  return out;
}

Evaluation evaluate_models(const std::vector<UserData> &users, const std::map<std::string, Pipeline> &pipelines,
                           Condition condition) {
  std::vector<std::vector<PromptOutcome>> per_user(users.size());
  std::size_t sessions = 0;
  for (const auto &u : users) {
    if (!u.tests(condition).empty() && !pipelines.count(u.user_id))
      throw Error(ErrorKind::Input, "no model for " + u.user_id);
    sessions += u.tests(condition).size();
  }
  if (sessions == 0)
    throw Error(ErrorKind::Input, "dataset has no " + to_string(condition) + " test sessions");

  parallel_for(users.size(), [&](std::size_t i) {
    const auto &u = users[i];
    for (const auto &s : u.tests(condition)) {
      auto o = score_session(s, pipelines.at(u.user_id));
      per_user[i].insert(per_user[i].end(), o.begin(), o.end());
    }
  });

  std::vector<Pose> labels;
  for (const auto &[id, p] : pipelines) {
    if (labels.empty())
      labels = matrix_labels(p);
    else if (labels != matrix_labels(p))
      throw Error(ErrorKind::Input, "user models disagree on their class lists");
  }
  Evaluation e{ConfusionMatrix(labels), {}, {}};
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (per_user[i].empty())
      continue;
    ConfusionMatrix m(labels);
    for (const auto &o : per_user[i])
      m.add(o.truth, o.predicted);
    e.matrix.merge(m);
    e.per_user.emplace(users[i].user_id, m);
    e.outcomes.insert(e.outcomes.end(), per_user[i].begin(), per_user[i].end());
  }
  return e;
}

std::map<std::string, Pipeline> train_all(const std::vector<UserData> &users, const EvalConfig &config) {
  std::vector<Pipeline> models(users.size());
  parallel_for(users.size(), [&](std::size_t i) { models[i] = train_user(users[i], config); });
  std::map<std::string, Pipeline> out;
  for (std::size_t i = 0; i < users.size(); ++i)
    out.emplace(users[i].user_id, std::move(models[i]));
  return out;
}

Evaluation evaluate(const std::vector<UserData> &users, const EvalConfig &config) {
  if (users.empty())
    throw Error(ErrorKind::Input, "dataset has no users");
  return evaluate_models(users, train_all(users, config), config.condition);
}

// ---- ablation --------------------------------------------------------------

const AblationEntry &AblationResult::at(const std::string &name) const {
  for (const auto &e : entries)
    if (e.name == name)
      return e;
  throw Error(ErrorKind::Input, "no ablation entry named " + name);
}

namespace {

std::string group_name(const ChannelSet &c) {
  const auto idx = c.indices();
  if (idx.size() == 1)
    return "S" + std::to_string(idx.front() + 1);
  return "S" + std::to_string(idx.front() + 1) + "-" + std::to_string(idx.back() + 1);
}

} // namespace

AblationResult ablate_exclude_one(const std::vector<UserData> &users, const std::vector<int> &sensors,
                                  const EvalConfig &base) {
  std::vector<ChannelSet> sets;
  for (int s : sensors)
    sets.push_back(ChannelSet::all_except(s));
  AblationResult r;
  r.baseline = evaluate(users, base).accuracy();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    EvalConfig c = base;
    c.pipeline.channels = sets[i];
    const double acc = evaluate(users, c).accuracy();
    r.entries.push_back({"without S" + std::to_string(sensors[i]), sets[i], acc, r.baseline - acc});
  }
  return r;
}

std::vector<ChannelSet> subset_groups() {
  return {ChannelSet::sensors(5, 5), ChannelSet::sensors(4, 6), ChannelSet::sensors(3, 7), ChannelSet::sensors(2, 8),
          ChannelSet::sensors(1, 9)};
}

AblationResult ablate_subsets(const std::vector<UserData> &users, const EvalConfig &base) {
  AblationResult r;
  r.baseline = evaluate(users, base).accuracy();
  for (const auto &set : subset_groups()) {
    EvalConfig c = base;
    c.pipeline.channels = set;
    const double acc = evaluate(users, c).accuracy();
    r.entries.push_back({group_name(set), set, acc, r.baseline - acc});
  }
  return r;
}

Evaluation training_reduction(const std::vector<UserData> &users, int n, const EvalConfig &base) {
  if (n < 1 || n > 3)
    throw Error(ErrorKind::Input, "training reduction takes 1, 2 or 3 sessions");
  EvalConfig c = base;
  c.train_sessions = n;
  return evaluate(users, c);
}

// ---- pose subsets ----------------------------------------------------------

PoseSubset dpad_subset() {
  return {"dpad", {Pose::IndexMiddle, Pose::MiddleDistal, Pose::MiddleProximal, Pose::RingMiddle}};
}

PoseSubset corners_subset() {
  return {"corners", {Pose::IndexDistal, Pose::IndexProximal, Pose::LittleDistal, Pose::LittleProximal}};
}

PoseSubset full_subset() { return {"all", {kAllPoses.begin(), kAllPoses.end()}}; }

PoseSubset subset_by_name(const std::string &name) {
  if (name == "dpad")
    return dpad_subset();
  if (name == "corners")
    return corners_subset();
  if (name == "all")
    return full_subset();
  throw Error(ErrorKind::Input, "unknown pose subset '" + name + "' (expected dpad, corners or all)");
}

Evaluation subset_eval(const std::vector<UserData> &users, const PoseSubset &subset, bool cross_session,
                       const EvalConfig &base) {
  std::vector<Pose> members = subset.members;
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.size() < 2)
    throw Error(ErrorKind::Input, "pose subset '" + subset.name + "' needs at least two poses");
  for (Pose p : members)
    if (p == Pose::NoPose)
      throw Error(ErrorKind::Input, "pose subsets cannot contain no-pose");
  EvalConfig c = base;
  c.pipeline.classes = members;
  c.condition = cross_session ? Condition::Calibrated : Condition::InSession;
  return evaluate(users, c);
}

// ---- reports ---------------------------------------------------------------

std::string confusion_csv(const ConfusionMatrix &m) {
  std::ostringstream out;
  out << "true";
  for (Pose p : m.labels())
    out << ',' << to_string(p);
  out << ",no-emission,total,accuracy\n";
  char buf[32];
  for (Pose t : m.labels()) {
    out << to_string(t);
    for (Pose p : m.labels())
      out << ',' << m.count(t, p);
    std::snprintf(buf, sizeof buf, "%.6f", m.class_accuracy(t));
    out << ',' << m.no_emission(t) << ',' << m.row_total(t) << ',' << buf << '\n';
  }
  return out.str();
}

std::string outcomes_csv(const std::vector<PromptOutcome> &outcomes) {
  std::ostringstream out;
  out << "user_id,session_id,prompt,truth,predicted,event_ms\n";
  for (const auto &o : outcomes)
    out << o.user_id << ',' << o.session_id << ',' << o.prompt << ',' << to_string(o.truth) << ','
        << (o.predicted ? std::string(to_string(*o.predicted)) : std::string("no-emission")) << ',' << o.event_ms
        << '\n';
  return out.str();
}

std::string ablation_csv(const AblationResult &r) {
  std::ostringstream out;
  out << "configuration,channels,accuracy,drop\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "baseline,S1-9,%.6f,%.6f\n", r.baseline, 0.0);
  out << buf;
  for (const auto &e : r.entries) {
    std::string ch;
    for (int c : e.channels.indices())
      ch += (ch.empty() ? "S" : " S") + std::to_string(c + 1);
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f\n", e.accuracy, e.drop);
    out << e.name << ',' << ch << buf;
  }
  return out.str();
}

std::string summary_text(const Evaluation &e, const std::string &title) {
  std::ostringstream out;
  char buf[160];
  out << title << '\n';
  std::snprintf(buf, sizeof buf, "  prompts %d, correct %d, wrong %d, no emission %d\n", e.matrix.total(),
                e.matrix.correct(), e.matrix.total() - e.matrix.correct() - e.matrix.missed(), e.matrix.missed());
  out << buf;
  std::snprintf(buf, sizeof buf, "  accuracy %.4f\n", e.accuracy());
  out << buf;
  const char *phalanx_names[] = {"distal", "middle", "proximal"};
  for (int ph = 0; ph < 3; ++ph) {
    bool any = false;
    for (Pose p : e.matrix.labels())
      any = any || phalanx_of(p) == static_cast<Phalanx>(ph);
    if (!any)
      continue;
    std::snprintf(buf, sizeof buf, "  %-8s phalanx accuracy %.4f\n", phalanx_names[ph],
                  e.matrix.phalanx_accuracy(static_cast<Phalanx>(ph)));
    out << buf;
  }
  for (const auto &[id, m] : e.per_user) {
    std::snprintf(buf, sizeof buf, "  %-10s %.4f (%d prompts)\n", id.c_str(), m.accuracy(), m.total());
    out << buf;
  }
  return out.str();
}

} // namespace thumbtrak
