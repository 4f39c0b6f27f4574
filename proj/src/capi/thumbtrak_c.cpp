#include "thumbtrak/thumbtrak.h"

#include "analysis.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "pipeline.hpp"
#include "recognizer.hpp"
#include "server.hpp"
#include "service.hpp"
#include "study.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace thumbtrak;

struct tt_model {
  Pipeline pipeline;
};

struct tt_recognizer {
  const tt_model *model;
  Recognizer recognizer;
};

struct tt_report {
  std::string text;
  std::map<std::string, std::string> tables;
  std::map<std::string, double> metrics;
  std::vector<std::pair<std::string, double>> entries;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_stop_serving{false};

tt_status status_of(ErrorKind k) {
  switch (k) {
  case ErrorKind::Config:
    return TT_ERR_CONFIG;
  case ErrorKind::Input:
    return TT_ERR_INPUT;
  case ErrorKind::Training:
    return TT_ERR_TRAINING;
  case ErrorKind::Dimension:
    return TT_ERR_DIMENSION;
  case ErrorKind::Parse:
    return TT_ERR_PARSE;
  case ErrorKind::Version:
    return TT_ERR_VERSION;
  case ErrorKind::Io:
    return TT_ERR_IO;
  }
  return TT_ERR_INTERNAL;
}

tt_status fail(tt_status s, std::string message) {
  g_last_error = std::move(message);
  return s;
}

// Runs f, translating exceptions into a status and the last error.
template <typename F> tt_status guarded(F &&f) {
  g_last_error.clear();
  try {
    f();
    return TT_OK;
  } catch (const Error &e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const fs::filesystem_error &e) {
    return fail(TT_ERR_IO, e.what());
  } catch (const std::bad_alloc &) {
    return fail(TT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(TT_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char *what) {
  if (!ok)
    throw Error(ErrorKind::Input, what);
}

const sim::SimConfig &config_or_default(const char *path, sim::SimConfig &storage) {
  if (!path)
    return sim::default_sim_config();
  storage = sim::load_sim_config(path);
  return storage;
}

int parse_int(std::string_view s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw Error(ErrorKind::Input, "bad sensor number '" + std::string(s) + "'");
  return v;
}

// "1,3-5" -> 0-based {0, 2, 3, 4}
ChannelSet parse_channels(std::string_view spec) {
  std::vector<int> out;
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    const auto item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    const auto dash = item.find('-');
    const int lo = parse_int(item.substr(0, dash));
    const int hi = dash == std::string_view::npos ? lo : parse_int(item.substr(dash + 1));
    if (lo < 1 || hi > static_cast<int>(kSensorCount) || lo > hi)
      throw Error(ErrorKind::Input, "sensor range '" + std::string(item) + "' outside 1-9");
    for (int s = lo; s <= hi; ++s)
      out.push_back(s - 1);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  require(!out.empty(), "no sensors selected");
  return ChannelSet(out);
}

EvalConfig eval_config(const tt_train_options *o) {
  tt_train_options defaults;
  tt_train_options_init(&defaults);
  if (!o)
    o = &defaults;
  EvalConfig c;
  if (o->channels)
    c.pipeline.channels = parse_channels(o->channels);
  if (o->classes)
    c.pipeline.classes = subset_by_name(o->classes).members;
  require(o->train_sessions >= 0, "train_sessions must be non-negative");
  c.train_sessions = o->train_sessions;
  require(o->c > 0.0, "C must be positive");
  c.pipeline.hyperparameters.C = o->c;
  c.pipeline.hyperparameters.seed = o->seed;
  if (o->shuffle_labels)
    c.shuffle_labels_seed = o->seed;
  return c;
}

std::vector<UserData> load_users(const char *dir) {
  require(dir, "dataset directory is required");
  if (!fs::is_directory(dir))
    throw Error(ErrorKind::Io, std::string("not a dataset directory: ") + dir);
  auto users = group_by_user(load_dataset(dir));
  if (users.empty())
    throw Error(ErrorKind::Input, std::string("no sessions under ") + dir);
  return users;
}

void fill_evaluation(tt_report &r, const Evaluation &e, const std::string &title) {
  r.text = summary_text(e, title);
  r.tables["confusion"] = confusion_csv(e.matrix);
  r.tables["outcomes"] = outcomes_csv(e.outcomes);
  r.metrics["accuracy"] = e.accuracy();
  r.metrics["correct"] = e.matrix.correct();
  r.metrics["total"] = e.matrix.total();
  r.metrics["missed"] = e.matrix.missed();
  r.metrics["classes"] = static_cast<double>(e.matrix.labels().size());
  for (const auto &[user, m] : e.per_user)
    r.entries.emplace_back(user, m.accuracy());
}

void fill_ablation(tt_report &r, const AblationResult &a, const std::string &title) {
  std::ostringstream text;
  text << title << "\n  baseline " << a.baseline << "\n";
  for (const auto &e : a.entries) {
    text << "  " << e.name << "  accuracy " << e.accuracy << "  drop " << e.drop << "\n";
    r.entries.emplace_back(e.name, e.accuracy);
    r.metrics["accuracy:" + e.name] = e.accuracy;
    r.metrics["drop:" + e.name] = e.drop;
  }
  r.text = text.str();
  r.tables["ablation"] = ablation_csv(a);
  r.metrics["baseline"] = a.baseline;
}

template <typename T> T *out_handle(T **out) {
  require(out != nullptr, "output handle pointer is null");
  *out = nullptr;
  return nullptr;
}

} // namespace

extern "C" {

const char *tt_version(void) { return "1.0.0"; }

const char *tt_last_error(void) { return g_last_error.c_str(); }

const char *tt_status_name(tt_status status) {
  switch (status) {
  case TT_OK:
    return "ok";
  case TT_ERR_INPUT:
    return "input error";
  case TT_ERR_CONFIG:
    return "configuration error";
  case TT_ERR_TRAINING:
    return "training error";
  case TT_ERR_DIMENSION:
    return "dimension mismatch";
  case TT_ERR_PARSE:
    return "parse error";
  case TT_ERR_VERSION:
    return "version error";
  case TT_ERR_IO:
    return "i/o error";
  case TT_ERR_INTERNAL:
    return "internal error";
  }
  return "unknown status";
}

int tt_exit_code(tt_status status) {
  if (status == TT_OK)
    return 0;
  return status == TT_ERR_IO ? 2 : 1;
}

const char *tt_pose_name(int pose) {
  if (pose < 0 || pose >= static_cast<int>(kLabelCount))
    return nullptr;
  return kPoseNames[static_cast<std::size_t>(pose)].data();
}

int tt_pose_from_name(const char *name) {
  if (!name)
    return -1;
  const auto p = pose_from_string(name);
  return p ? static_cast<int>(index_of(*p)) : -1;
}

void tt_simulate_options_init(tt_simulate_options *o) {
  if (!o)
    return;
  const StudyOptions d;
  o->users = d.users;
  o->train_sessions = d.train_sessions;
  o->test_sessions = d.test_sessions;
  o->cross_session = d.cross_session ? 1 : 0;
  o->seed = d.seed;
  o->noise_mm = d.noise.sigma_mm;
  o->dropout = d.noise.dropout;
  o->config = nullptr;
}

tt_status tt_simulate(const tt_simulate_options *o, const char *out_dir) {
  return guarded([&] {
    require(o && out_dir, "options and output directory are required");
    StudyOptions s;
    s.users = o->users;
    s.train_sessions = o->train_sessions;
    s.test_sessions = o->test_sessions;
    s.cross_session = o->cross_session != 0;
    s.seed = o->seed;
    s.noise.sigma_mm = o->noise_mm;
    s.noise.dropout = o->dropout;
    s.noise.validate();
    sim::SimConfig storage;
    const auto &config = config_or_default(o->config, storage);
    save_dataset(simulate_study(config, s), out_dir);
  });
}

void tt_train_options_init(tt_train_options *o) {
  if (!o)
    return;
  const svm::Hyperparameters h;
  o->channels = nullptr;
  o->classes = nullptr;
  o->train_sessions = 0;
  o->c = h.C;
  o->seed = h.seed;
  o->shuffle_labels = 0;
}

tt_status tt_train(const char *dataset_dir, const tt_train_options *options, const char *models_dir) {
  return guarded([&] {
    require(models_dir, "models directory is required");
    const auto config = eval_config(options);
    const auto users = load_users(dataset_dir);
    const auto models = train_all(users, config);
    std::error_code ec;
    fs::create_directories(models_dir, ec);
    if (ec)
      throw Error(ErrorKind::Io, std::string("cannot create ") + models_dir + ": " + ec.message());
    for (const auto &[user, p] : models)
      save_pipeline(p, fs::path(models_dir) / (user + ".json"));
  });
}

tt_status tt_model_load(const char *path, tt_model **out) {
  return guarded([&] {
    out_handle(out);
    require(path, "model path is required");
    *out = new tt_model{load_pipeline(path)};
  });
}

tt_status tt_model_save(const tt_model *model, const char *path) {
  return guarded([&] {
    require(model && path, "model and path are required");
    save_pipeline(model->pipeline, path);
  });
}

void tt_model_free(tt_model *model) { delete model; }

size_t tt_model_feature_dim(const tt_model *model) { return model ? model->pipeline.feature_dim() : 0; }

tt_status tt_model_decide(const tt_model *model, const double raw[TT_SENSOR_COUNT], int *pose) {
  return guarded([&] {
    require(model && raw && pose, "model, readings and output are required");
    const auto d = model->pipeline.decide(clamp_raw(std::span<const double>(raw, kSensorCount)));
    *pose = d ? static_cast<int>(index_of(*d)) : -1;
  });
}

tt_status tt_recognizer_new(const tt_model *model, tt_recognizer **out) {
  return guarded([&] {
    out_handle(out);
    require(model, "model is required");
    *out = new tt_recognizer{model, Recognizer(model->pipeline.recognizer)};
  });
}

void tt_recognizer_free(tt_recognizer *recognizer) { delete recognizer; }

void tt_recognizer_reset(tt_recognizer *recognizer) {
  if (recognizer)
    recognizer->recognizer.reset();
}

tt_status tt_recognizer_push(tt_recognizer *r, const double raw[TT_SENSOR_COUNT], int64_t t_ms, tt_event *event,
                             int *emitted) {
  return guarded([&] {
    require(r && raw && event && emitted, "recognizer, readings and outputs are required");
    const auto ev = r->recognizer.step(clamp_raw(std::span<const double>(raw, kSensorCount), t_ms), r->model->pipeline);
    *emitted = ev ? 1 : 0;
    if (!ev)
      return;
    event->pose = static_cast<int>(index_of(ev->label));
    event->t_ms = ev->timestamp_ms;
    for (std::size_t i = 0; i < kPoseCount; ++i)
      event->tally[i] = ev->tally[i];
  });
}

tt_status tt_evaluate(const char *dataset_dir, const char *models, const char *condition, tt_report **out) {
  return guarded([&] {
    out_handle(out);
    require(models, "models path is required");
    const auto cond = condition_from_string(condition ? condition : "in-session");
    if (!cond)
      throw Error(ErrorKind::Input, std::string("unknown condition '") + condition + "'");
    const auto users = load_users(dataset_dir);

    std::map<std::string, Pipeline> pipelines;
    if (fs::is_directory(models)) {
      for (const auto &entry : fs::directory_iterator(models))
        if (entry.path().extension() == ".json")
          pipelines.emplace(entry.path().stem().string(), load_pipeline(entry.path()));
    } else {
      const Pipeline shared = load_pipeline(models);
      for (const auto &u : users)
        pipelines.emplace(u.user_id, shared);
    }
    auto r = std::make_unique<tt_report>();
    fill_evaluation(*r, evaluate_models(users, pipelines, *cond), "evaluation (" + to_string(*cond) + ")");
    *out = r.release();
  });
}

tt_status tt_ablate(const char *dataset_dir, const char *mode, const tt_train_options *options, tt_report **out) {
  return guarded([&] {
    out_handle(out);
    const std::string m = mode ? mode : "exclude";
    require(m == "exclude" || m == "groups", "ablation mode must be 'exclude' or 'groups'");
    const auto config = eval_config(options);
    const auto users = load_users(dataset_dir);
    auto r = std::make_unique<tt_report>();
    if (m == "exclude")
      fill_ablation(*r, ablate_exclude_one(users, {1, 2, 3, 4, 5, 6, 7, 8, 9}, config), "exclude one sensor");
    else
      fill_ablation(*r, ablate_subsets(users, config), "sensor groups");
    *out = r.release();
  });
}

tt_status tt_reduce_train(const char *dataset_dir, int max_sessions, const tt_train_options *options,
                          tt_report **out) {
  return guarded([&] {
    out_handle(out);
    require(max_sessions >= 1, "max_sessions must be at least 1");
    const auto config = eval_config(options);
    const auto users = load_users(dataset_dir);
    auto r = std::make_unique<tt_report>();
    std::ostringstream text, csv;
    text << "training reduction\n";
    csv << "sessions,accuracy\n";
    for (int n = 1; n <= max_sessions; ++n) {
      const double acc = training_reduction(users, n, config).accuracy();
      const auto name = std::to_string(n);
      text << "  " << n << " session" << (n == 1 ? "" : "s") << "  accuracy " << acc << "\n";
      csv << n << "," << acc << "\n";
      r->entries.emplace_back(name, acc);
      r->metrics["accuracy:" + name] = acc;
    }
    r->text = text.str();
    r->tables["reduction"] = csv.str();
    *out = r.release();
  });
}

tt_status tt_subsets(const char *dataset_dir, const char *name, int cross_session, const tt_train_options *options,
                     tt_report **out) {
  return guarded([&] {
    out_handle(out);
    const auto subset = subset_by_name(name ? name : "all");
    const auto config = eval_config(options);
    const auto users = load_users(dataset_dir);
    auto r = std::make_unique<tt_report>();
    fill_evaluation(*r, subset_eval(users, subset, cross_session != 0, config),
                    "subset " + subset.name + (cross_session ? " (cross-session)" : " (in-session)"));
    *out = r.release();
  });
}

tt_status tt_calibrate(const char *reference_capture, const char *current_capture, tt_report **out) {
  return guarded([&] {
    out_handle(out);
    require(reference_capture && current_capture, "two capture files are required");
    const auto report = check(reference_from_capture(load_session(reference_capture)),
                              reference_from_capture(load_session(current_capture)));
    const auto hint = guidance(report);
    auto r = std::make_unique<tt_report>();
    std::ostringstream text, csv;
    text << "calibration check\n  average offset " << report.average_offset << " mm (threshold "
         << kCalibrationThresholdMm << ")\n  " << (report.pass ? "pass" : "fail") << "\n  " << hint.text() << "\n";
    csv << "pose,sensor,signed_offset_mm,offset_mm\n";
    for (std::size_t p = 0; p < kCalibrationPoses.size(); ++p)
      for (std::size_t s = 0; s < kSensorCount; ++s)
        csv << to_string(kCalibrationPoses[p]) << "," << s + 1 << "," << report.signed_offsets[p][s] << ","
            << report.offsets[p][s] << "\n";
    r->text = text.str();
    r->tables["offsets"] = csv.str();
    r->metrics["average_offset_mm"] = report.average_offset;
    r->metrics["pass"] = report.pass ? 1.0 : 0.0;
    r->metrics["worst_sensor"] = static_cast<double>(report.worst_sensor + 1);
    *out = r.release();
  });
}

void tt_report_free(tt_report *report) { delete report; }

const char *tt_report_text(const tt_report *report) { return report ? report->text.c_str() : ""; }

const char *tt_report_csv(const tt_report *report, const char *table) {
  if (!report || !table)
    return nullptr;
  const auto it = report->tables.find(table);
  return it == report->tables.end() ? nullptr : it->second.c_str();
}

tt_status tt_report_metric(const tt_report *report, const char *name, double *value) {
  return guarded([&] {
    require(report && name && value, "report, name and output are required");
    const auto it = report->metrics.find(name);
    if (it == report->metrics.end())
      throw Error(ErrorKind::Input, std::string("report has no metric '") + name + "'");
    *value = it->second;
  });
}

size_t tt_report_entry_count(const tt_report *report) { return report ? report->entries.size() : 0; }

tt_status tt_report_entry(const tt_report *report, size_t index, const char **name, double *accuracy) {
  return guarded([&] {
    require(report && name && accuracy, "report and outputs are required");
    require(index < report->entries.size(), "entry index out of range");
    *name = report->entries[index].first.c_str();
    *accuracy = report->entries[index].second;
  });
}

void tt_serve_options_init(tt_serve_options *o) {
  if (!o)
    return;
  const ServerOptions d;
  o->host = "127.0.0.1";
  o->port = d.port;
  o->speed = d.speed;
  o->max_clients = 0;
  o->model = nullptr;
  o->replay = nullptr;
  o->user = 0;
  o->seed = StudyOptions{}.seed;
  o->config = nullptr;
  o->on_listen = nullptr;
  o->context = nullptr;
}

tt_status tt_serve(const tt_serve_options *o) {
  return guarded([&] {
    require(o != nullptr, "options are required");
    require(o->user >= 0, "user index must be non-negative");
    g_stop_serving = false;
    sim::SimConfig storage;
    const auto &config = config_or_default(o->config, storage);
    StudyOptions study;
    study.seed = o->seed;
    ServiceHand hand = study_participant(config, study, static_cast<std::size_t>(o->user));

    Pipeline pipeline;
    if (o->model) {
      pipeline = load_pipeline(o->model);
    } else {
      // Live training: the participant's own training sessions.
      Rng rng(o->seed);
      UserData data;
      data.user_id = hand.user.id;
      for (int k = 1; k <= study.train_sessions; ++k)
        data.train.push_back(record_training_session(hand.user, hand.rig, hand.user.mount,
                                                     "train-" + std::to_string(k), study.noise, rng));
      pipeline = train_user(data, {});
    }
    std::optional<Session> recording;
    if (o->replay)
      recording = load_session(o->replay);

    ServiceOptions service;
    service.seed = o->seed;
    ServerOptions server;
    server.host = o->host ? o->host : "127.0.0.1";
    server.port = o->port;
    server.speed = o->speed;
    server.max_clients = o->max_clients;
    if (o->on_listen)
      server.on_listen = [o](int port) { o->on_listen(port, o->context); };

    serve(
        server,
        [&]() -> std::unique_ptr<SessionCore> {
          if (recording)
            return std::make_unique<SessionCore>(pipeline, *recording, service);
          return std::make_unique<SessionCore>(pipeline, hand, service);
        },
        &g_stop_serving);
  });
}

void tt_serve_stop(void) { g_stop_serving = true; }

} // extern "C"
