#pragma once

// Offline evaluation: per-user training, prompt-level event scoring, sensor
// ablation, training reduction and pose subsets.

#include "dataset.hpp"
#include "pipeline.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thumbtrak {

/// Rows are true poses, columns predicted poses; prompts without an event
/// are counted in a separate no-emission column.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(std::vector<Pose> labels = {kAllPoses.begin(), kAllPoses.end()});

  void add(Pose truth, std::optional<Pose> predicted);
  void merge(const ConfusionMatrix &other);

  const std::vector<Pose> &labels() const { return labels_; }
  int count(Pose truth, Pose predicted) const;
  int no_emission(Pose truth) const;
  int row_total(Pose truth) const;
  int total() const;
  int correct() const;
  int missed() const;
  /// correct / total, no-emission prompts included in the total.
  double accuracy() const;
  double class_accuracy(Pose truth) const;
  double phalanx_accuracy(Phalanx ph) const;
  bool operator==(const ConfusionMatrix &) const = default;

private:
  std::size_t slot(Pose p) const;

  std::vector<Pose> labels_;
  std::vector<std::vector<int>> counts_;
  std::vector<int> no_emission_;
};

struct PromptOutcome {
  std::string user_id;
  std::string session_id;
  std::size_t prompt = 0;
  Pose truth = Pose::NoPose;
  std::optional<Pose> predicted; // first event inside the prompt window
  std::int64_t event_ms = -1;
  bool operator==(const PromptOutcome &) const = default;
};

struct Evaluation {
  ConfusionMatrix matrix;
  std::vector<PromptOutcome> outcomes;
  std::map<std::string, ConfusionMatrix> per_user;
  double accuracy() const { return matrix.accuracy(); }
};

struct EvalConfig {
  PipelineOptions pipeline{};
  int train_sessions = 0; // first n training sessions; 0 uses all
  Condition condition = Condition::InSession;
  /// When set, training pose labels are permuted with this seed (a
  /// chance-level control).
  std::optional<std::uint64_t> shuffle_labels_seed;
};

/// Recorded frames of the user's training sessions, per the config.
Pipeline train_user(const UserData &user, const EvalConfig &config);

/// Replays the prompts of `session` whose pose the pipeline classifies
/// (their windows concatenated) and scores the first event in each window.
std::vector<PromptOutcome> score_session(const Session &session, const Pipeline &pipeline);

/// Scores every user's test sessions of `condition` with that user's
/// pipeline. Throws Error(Input) when a user has no pipeline.
Evaluation evaluate_models(const std::vector<UserData> &users, const std::map<std::string, Pipeline> &pipelines,
                           Condition condition);

/// Trains per user, then evaluate_models.
Evaluation evaluate(const std::vector<UserData> &users, const EvalConfig &config = {});

std::map<std::string, Pipeline> train_all(const std::vector<UserData> &users, const EvalConfig &config = {});

struct AblationEntry {
  std::string name;
  ChannelSet channels;
  double accuracy = 0.0;
  double drop = 0.0; // baseline - accuracy
};

struct AblationResult {
  double baseline = 0.0;
  std::vector<AblationEntry> entries;
  const AblationEntry &at(const std::string &name) const;
};

/// Retrains both stages without each listed sensor (1-based).
AblationResult ablate_exclude_one(const std::vector<UserData> &users, const std::vector<int> &sensors,
                                  const EvalConfig &base = {});

/// The growing groups {S5}, {S4-6}, {S3-7}, {S2-8}, {S1-9}.
std::vector<ChannelSet> subset_groups();
AblationResult ablate_subsets(const std::vector<UserData> &users, const EvalConfig &base = {});

/// Trains on the first n in 1..3 training sessions.
Evaluation training_reduction(const std::vector<UserData> &users, int n, const EvalConfig &base = {});

struct PoseSubset {
  std::string name;
  std::vector<Pose> members;
};

PoseSubset dpad_subset();
PoseSubset corners_subset();
PoseSubset full_subset();
/// "dpad", "corners" or "all"; throws Error(Input) otherwise.
PoseSubset subset_by_name(const std::string &name);

/// Retrains the classifier on the subset's poses only and scores only the
/// subset's prompts, in-session or on the calibrated remount sessions.
Evaluation subset_eval(const std::vector<UserData> &users, const PoseSubset &subset, bool cross_session,
                       const EvalConfig &base = {});

std::string confusion_csv(const ConfusionMatrix &m);
std::string outcomes_csv(const std::vector<PromptOutcome> &outcomes);
std::string ablation_csv(const AblationResult &r);
std::string summary_text(const Evaluation &e, const std::string &title);

} // namespace thumbtrak
