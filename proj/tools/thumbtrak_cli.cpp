// thumbtrak command-line front end. Talks to the library through the C API only.

#include "thumbtrak/thumbtrak.h"

#include "CLI11.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;

struct ReportDeleter {
  void operator()(tt_report *r) const { tt_report_free(r); }
};
using Report = std::unique_ptr<tt_report, ReportDeleter>;

int report_failure(tt_status s) {
  std::cerr << "thumbtrak: " << tt_status_name(s) << ": " << tt_last_error() << "\n";
  return tt_exit_code(s);
}

// Writes a report table to `path` when one was requested.
int write_table(const tt_report *r, const char *table, const std::string &path) {
  if (path.empty())
    return 0;
  const char *csv = tt_report_csv(r, table);
  if (!csv) {
    std::cerr << "thumbtrak: report has no " << table << " table\n";
    return kExitDomain;
  }
  std::ofstream out(path, std::ios::binary);
  out << csv;
  if (!out) {
    std::cerr << "thumbtrak: cannot write " << path << "\n";
    return kExitIo;
  }
  return 0;
}

struct TrainFlags {
  std::string channels;
  std::string classes;
  int train_sessions = 0;
  double c = 1.0;
  std::uint64_t seed = 0;
  bool shuffle_labels = false;

  void add_to(CLI::App *app, bool with_selection) {
    if (with_selection) {
      app->add_option("--channels", channels, "Sensors to use, e.g. 1-9 or 3,4,6")->default_str("1-9");
      app->add_option("--classes", classes, "Pose classes: all, dpad or corners")->default_str("all");
    }
    app->add_option("--train-sessions", train_sessions, "Train on the first n sessions (0 = all)")->default_val(0);
    app->add_option("-C,--cost", c, "SVM cost")->default_val(1.0);
    app->add_option("--seed", seed, "Seed for the solver's coordinate order")->default_val(0);
    app->add_flag("--shuffle-labels", shuffle_labels, "Permute pose labels before training (chance control)");
  }

  tt_train_options options() const {
    tt_train_options o;
    tt_train_options_init(&o);
    o.channels = channels.empty() ? nullptr : channels.c_str();
    o.classes = classes.empty() ? nullptr : classes.c_str();
    o.train_sessions = train_sessions;
    o.c = c;
    o.seed = seed;
    o.shuffle_labels = shuffle_labels ? 1 : 0;
    return o;
  }
};

void on_interrupt(int) { tt_serve_stop(); }

void print_listening(int port, void *context) {
  std::printf("listening on %s:%d\n", static_cast<const char *>(context), port);
  std::fflush(stdout);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Thumb-ring micro finger pose recognition: simulation, training, analysis and live sessions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tt_version());

  int rc = 0;

  // simulate
  tt_simulate_options sim;
  tt_simulate_options_init(&sim);
  std::string sim_out, sim_config, sim_sessions;
  bool no_cross = false;
  auto *simulate = app.add_subcommand("simulate", "Simulate the study and write JSONL sessions");
  simulate->add_option("--users", sim.users, "Simulated participants")->default_val(sim.users);
  simulate->add_option("--sessions", sim_sessions, "Training/testing session counts, e.g. 3/2");
  simulate->add_option("--seed", sim.seed, "Random seed")->default_val(sim.seed);
  simulate->add_option("--noise", sim.noise_mm, "Reading noise sigma in mm")->default_val(sim.noise_mm);
  simulate->add_option("--dropout", sim.dropout, "Probability a reading is lost")->default_val(sim.dropout);
  simulate->add_option("--config", sim_config, "Hand configuration JSON (default: built in)");
  simulate->add_flag("--no-cross-session", no_cross, "Skip the remount and calibration sessions");
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->callback([&] {
    if (!sim_sessions.empty()) {
      int train = 0, test = 0;
      char sep = 0;
      if (std::sscanf(sim_sessions.c_str(), "%d%c%d", &train, &sep, &test) != 3 || sep != '/')
        throw CLI::ValidationError("--sessions", "expected TRAIN/TEST, e.g. 3/2");
      sim.train_sessions = train;
      sim.test_sessions = test;
    }
    sim.cross_session = no_cross ? 0 : 1;
    sim.config = sim_config.empty() ? nullptr : sim_config.c_str();
    const tt_status s = tt_simulate(&sim, sim_out.c_str());
    rc = s == TT_OK ? 0 : report_failure(s);
  });

  // train
  TrainFlags train_flags;
  std::string train_data, train_out;
  auto *train = app.add_subcommand("train", "Train one model per user");
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Directory for <user>.json models")->required();
  train_flags.add_to(train, true);
  train->callback([&] {
    const auto o = train_flags.options();
    const tt_status s = tt_train(train_data.c_str(), &o, train_out.c_str());
    rc = s == TT_OK ? 0 : report_failure(s);
  });

  // evaluate
  std::string eval_data, eval_models, eval_condition = "in-session", eval_confusion, eval_outcomes;
  auto *evaluate = app.add_subcommand("evaluate", "Score test sessions with trained models");
  evaluate->add_option("--data", eval_data, "Dataset directory")->required();
  evaluate->add_option("--models", eval_models, "Model directory or single model file")->required();
  evaluate->add_option("--condition", eval_condition, "in-session, uncalibrated or calibrated")
      ->default_val(eval_condition);
  evaluate->add_option("--confusion", eval_confusion, "Write the confusion matrix CSV here");
  evaluate->add_option("--outcomes", eval_outcomes, "Write per-prompt outcomes CSV here");
  evaluate->callback([&] {
    tt_report *raw = nullptr;
    const tt_status s = tt_evaluate(eval_data.c_str(), eval_models.c_str(), eval_condition.c_str(), &raw);
    if (s != TT_OK) {
      rc = report_failure(s);
      return;
    }
    Report r(raw);
    std::cout << tt_report_text(r.get());
    rc = write_table(r.get(), "confusion", eval_confusion);
    if (rc == 0)
      rc = write_table(r.get(), "outcomes", eval_outcomes);
  });

  // ablate
  TrainFlags ablate_flags;
  std::string ablate_data, ablate_mode = "exclude", ablate_csv;
  auto *ablate = app.add_subcommand("ablate", "Retrain with sensors removed");
  ablate->add_option("--data", ablate_data, "Dataset directory")->required();
  ablate->add_option("--mode", ablate_mode, "exclude (one sensor at a time) or groups (S5 .. S1-9)")
      ->check(CLI::IsMember({"exclude", "groups"}))
      ->default_val(ablate_mode);
  ablate->add_option("--csv", ablate_csv, "Write the ablation table here");
  ablate_flags.add_to(ablate, false);
  ablate->callback([&] {
    const auto o = ablate_flags.options();
    tt_report *raw = nullptr;
    const tt_status s = tt_ablate(ablate_data.c_str(), ablate_mode.c_str(), &o, &raw);
    if (s != TT_OK) {
      rc = report_failure(s);
      return;
    }
    Report r(raw);
    std::cout << tt_report_text(r.get());
    rc = write_table(r.get(), "ablation", ablate_csv);
  });

  // reduce-train
  TrainFlags reduce_flags;
  std::string reduce_data, reduce_csv;
  int reduce_max = 3;
  auto *reduce = app.add_subcommand("reduce-train", "Accuracy versus number of training sessions");
  reduce->add_option("--data", reduce_data, "Dataset directory")->required();
  reduce->add_option("--max-sessions", reduce_max, "Largest session count")->default_val(reduce_max);
  reduce->add_option("--csv", reduce_csv, "Write the reduction table here");
  reduce_flags.add_to(reduce, true);
  reduce->callback([&] {
    const auto o = reduce_flags.options();
    tt_report *raw = nullptr;
    const tt_status s = tt_reduce_train(reduce_data.c_str(), reduce_max, &o, &raw);
    if (s != TT_OK) {
      rc = report_failure(s);
      return;
    }
    Report r(raw);
    std::cout << tt_report_text(r.get());
    rc = write_table(r.get(), "reduction", reduce_csv);
  });

  // subsets
  TrainFlags subset_flags;
  std::string subset_data, subset_name = "dpad", subset_confusion;
  bool subset_cross = false;
  auto *subsets = app.add_subcommand("subsets", "Evaluate a pose subset with a retrained classifier");
  subsets->add_option("--data", subset_data, "Dataset directory")->required();
  subsets->add_option("--name", subset_name, "dpad, corners or all")
      ->check(CLI::IsMember({"dpad", "corners", "all"}))
      ->default_val(subset_name);
  subsets->add_flag("--cross-session", subset_cross, "Score the calibrated remount sessions");
  subsets->add_option("--confusion", subset_confusion, "Write the confusion matrix CSV here");
  subset_flags.add_to(subsets, false);
  subsets->callback([&] {
    const auto o = subset_flags.options();
    tt_report *raw = nullptr;
    const tt_status s = tt_subsets(subset_data.c_str(), subset_name.c_str(), subset_cross ? 1 : 0, &o, &raw);
    if (s != TT_OK) {
      rc = report_failure(s);
      return;
    }
    Report r(raw);
    std::cout << tt_report_text(r.get());
    rc = write_table(r.get(), "confusion", subset_confusion);
  });

  // calibrate
  std::string cal_reference, cal_current, cal_csv;
  auto *calibrate = app.add_subcommand("calibrate", "Compare a calibration capture against the reference");
  calibrate->add_option("--reference", cal_reference, "Reference capture session file")->required();
  calibrate->add_option("--current", cal_current, "Capture taken after remounting")->required();
  calibrate->add_option("--csv", cal_csv, "Write per-sensor offsets here");
  calibrate->callback([&] {
    tt_report *raw = nullptr;
    const tt_status s = tt_calibrate(cal_reference.c_str(), cal_current.c_str(), &raw);
    if (s != TT_OK) {
      rc = report_failure(s);
      return;
    }
    Report r(raw);
    std::cout << tt_report_text(r.get());
    rc = write_table(r.get(), "offsets", cal_csv);
  });

  // serve
  tt_serve_options serve_opts;
  tt_serve_options_init(&serve_opts);
  std::string serve_host = serve_opts.host, serve_model, serve_replay, serve_config;
  auto *serve = app.add_subcommand("serve", "Run the interactive session service");
  serve->add_option("--host", serve_host, "Address to bind")->default_val(serve_host);
  serve->add_option("--port", serve_opts.port, "TCP port (0 picks one)")->default_val(serve_opts.port);
  serve->add_option("--speed", serve_opts.speed, "Frame clock multiplier")->default_val(serve_opts.speed);
  serve->add_option("--max-clients", serve_opts.max_clients, "Exit after this many sessions (0 = never)")
      ->default_val(0);
  serve->add_option("--model", serve_model, "Trained model (default: train on the simulated user)");
  serve->add_option("--replay", serve_replay, "Session file to replay");
  serve->add_option("--user", serve_opts.user, "Simulated participant index")->default_val(0);
  serve->add_option("--seed", serve_opts.seed, "Random seed")->default_val(serve_opts.seed);
  serve->add_option("--config", serve_config, "Hand configuration JSON (default: built in)");
  serve->callback([&] {
    serve_opts.host = serve_host.c_str();
    serve_opts.model = serve_model.empty() ? nullptr : serve_model.c_str();
    serve_opts.replay = serve_replay.empty() ? nullptr : serve_replay.c_str();
    serve_opts.config = serve_config.empty() ? nullptr : serve_config.c_str();
    serve_opts.on_listen = print_listening;
    serve_opts.context = const_cast<char *>(serve_host.c_str());
    std::signal(SIGINT, on_interrupt);
    std::signal(SIGTERM, on_interrupt);
    const tt_status s = tt_serve(&serve_opts);
    rc = s == TT_OK ? 0 : report_failure(s);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitDomain;
  }
  return rc;
}
