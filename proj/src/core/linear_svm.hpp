#pragma once

#include "pose.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace thumbtrak::svm {

/// Dense row-major sample matrix.
class Samples {
public:
  explicit Samples(std::size_t dim = 0) : dim_(dim) {}

  void push(std::span<const double> row);
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ ? data_.size() / dim_ : 0; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

private:
  std::size_t dim_;
  std::vector<double> data_;
};

/// Per-feature standardization fitted on training data.
struct Scaler {
  static constexpr double kMinStd = 1e-6;

  std::vector<double> mean;
  std::vector<double> stddev;

  static Scaler fit(const Samples &x);
  std::vector<double> transform(std::span<const double> x) const;
  Samples transform(const Samples &x) const;
  bool operator==(const Scaler &) const = default;
};

struct Hyperparameters {
  double C = 1.0;
  double tol = 1e-4;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
  bool operator==(const Hyperparameters &) const = default;
};

/// Outcome of one dual coordinate descent solve on already-scaled data.
/// The bias is learned as the weight of a constant unit feature, so it is
/// regularized together with the weights.
struct DualSolution {
  std::vector<double> weights; // feature weights
  double bias = 0.0;
  std::vector<double> alpha;   // one dual variable per sample, in [0, C]
  int epochs = 0;
  bool converged = false;
  std::vector<double> objective_trace; // dual objective after each epoch (if requested)
};

/// L2-regularized L1-hinge linear SVM, solved in the dual by coordinate
/// descent over a seeded random permutation each epoch. Stops when the
/// largest single dual update in an epoch drops below tol.
/// labels are +1 / -1.
DualSolution solve_dual_cd(const Samples &x, std::span<const double> labels, const Hyperparameters &hp,
                           bool record_objective = false);

/// Dual objective sum(alpha) - |w|^2 / 2 of a solution (bias included in w).
double dual_objective(const DualSolution &s);

enum class ModelKind : std::uint8_t { Binary, Multiclass };

struct TrainingMetadata {
  std::vector<int> epochs;       // per sub-problem
  std::vector<bool> converged;   // per sub-problem
  bool operator==(const TrainingMetadata &) const = default;
};

struct Prediction {
  std::size_t class_index = 0; // into LinearModel::classes (multiclass)
  Pose label = Pose::NoPose;   // multiclass label
  bool is_pose = false;        // binary decision
  std::vector<double> scores;
};

class LinearModel {
public:
  static constexpr int kFormatVersion = 1;

  ModelKind kind = ModelKind::Binary;
  std::vector<Pose> classes;                // multiclass only
  std::vector<std::vector<double>> weights; // one row per class (one row for binary)
  std::vector<double> biases;
  Scaler scaler;
  Hyperparameters hyperparameters;
  TrainingMetadata metadata;

  std::size_t feature_dim() const { return scaler.mean.size(); }

  /// Raw affine scores on the standardized input. Throws Error(Dimension)
  /// if x has the wrong length.
  std::vector<double> scores(std::span<const double> x) const;

  /// Binary: is_pose = score >= 0. Multiclass: argmax, ties to the lowest
  /// class index.
  Prediction predict(std::span<const double> x) const;

  bool operator==(const LinearModel &) const = default;
};

/// Throws Error(Training) unless both labels are present or C <= 0.
LinearModel train_binary(const Samples &x, std::span<const bool> positive, const Hyperparameters &hp = {});

/// One-vs-rest over `classes` (default: labels present, in Pose order).
/// Throws Error(Training) naming any listed class without samples, or when
/// fewer than two classes remain.
LinearModel train_multiclass(const Samples &x, std::span<const Pose> labels, const Hyperparameters &hp = {},
                             std::optional<std::vector<Pose>> classes = std::nullopt);

std::string to_json(const LinearModel &m);
LinearModel model_from_json(const std::string &text);

void save_model(const LinearModel &m, const std::filesystem::path &path);
LinearModel load_model(const std::filesystem::path &path);

} // namespace thumbtrak::svm
