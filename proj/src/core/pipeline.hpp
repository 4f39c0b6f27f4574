#pragma once

// Trained two-stage pipeline: a pose/no-pose segmenter followed by a pose
// classifier, both over the same feature channels. Saved as one JSON bundle.

#include "calibration.hpp"
#include "features.hpp"
#include "linear_svm.hpp"
#include "recognizer.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace thumbtrak {

struct PipelineOptions {
  ChannelSet channels{};
  svm::Hyperparameters hyperparameters{};
  RecognizerConfig recognizer{};
  /// Classifier classes; frames of other poses are dropped from training.
  std::vector<Pose> classes{kAllPoses.begin(), kAllPoses.end()};
};

class Pipeline {
public:
  static constexpr int kFormatVersion = 1;

  ChannelSet channels{};
  RecognizerConfig recognizer{};
  svm::LinearModel segmenter;
  svm::LinearModel classifier;
  std::optional<CalibrationReference> calibration;

  std::size_t feature_dim() const { return channels.feature_dim(); }

  /// nullopt when the segmenter rejects the frame, otherwise the class.
  FrameDecision decide(const SensorFrame &frame) const;

  /// Throws Error(Dimension) if `channels` disagrees with either model.
  void validate() const;

  bool operator==(const Pipeline &) const = default;
};

/// Trains both stages. Frames labelled NoPose are segmenter negatives; frames
/// of a listed class are positives and classifier samples; the rest are
/// ignored. Throws Error(Training) when a listed class has no frames.
Pipeline train_pipeline(std::span<const SensorFrame> frames, std::span<const Pose> labels,
                        const PipelineOptions &options = {});

std::string to_json(const Pipeline &p);
Pipeline pipeline_from_json(const std::string &text);
void save_pipeline(const Pipeline &p, const std::filesystem::path &path);
Pipeline load_pipeline(const std::filesystem::path &path);

} // namespace thumbtrak
