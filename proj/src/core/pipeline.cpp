#include "pipeline.hpp"

#include "errors.hpp"
#include "json_codec.hpp"

#include <algorithm>
#include <memory>

namespace thumbtrak {

namespace {

using nlohmann::json;

constexpr const char *kBundleFormat = "thumbtrak-pipeline";

} // namespace

FrameDecision Pipeline::decide(const SensorFrame &frame) const {
  const auto f = extract(frame, channels);
  if (!segmenter.predict(f.values()).is_pose)
    return std::nullopt;
  return classifier.predict(f.values()).label;
}

void Pipeline::validate() const {
  if (segmenter.kind != svm::ModelKind::Binary || classifier.kind != svm::ModelKind::Multiclass)
    throw Error(ErrorKind::Input, "pipeline needs a binary segmenter and a multiclass classifier");
  for (const auto *m : {&segmenter, &classifier})
    if (m->feature_dim() != feature_dim())
      throw Error(ErrorKind::Dimension, "model expects " + std::to_string(m->feature_dim()) + " features but " +
                                            std::to_string(channels.size()) + " channels give " +
                                            std::to_string(feature_dim()));
  recognizer.validate();
}

Pipeline train_pipeline(std::span<const SensorFrame> frames, std::span<const Pose> labels,
                        const PipelineOptions &options) {
  if (frames.size() != labels.size())
    throw Error(ErrorKind::Input, "one label per frame is required");
  const auto listed = [&](Pose p) {
    return std::find(options.classes.begin(), options.classes.end(), p) != options.classes.end();
  };
  for (Pose p : options.classes)
    if (p == Pose::NoPose)
      throw Error(ErrorKind::Input, "no-pose cannot be a classifier class");

  svm::Samples seg_x(options.channels.feature_dim()), clf_x(options.channels.feature_dim());
  std::vector<char> seg_y;
  std::vector<Pose> clf_y;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const bool pose = labels[i] != Pose::NoPose;
    if (pose && !listed(labels[i]))
      continue;
    const auto f = extract(frames[i], options.channels);
    seg_x.push(f.values());
    seg_y.push_back(pose);
    if (pose) {
      clf_x.push(f.values());
      clf_y.push_back(labels[i]);
    }
  }

  Pipeline p;
  p.channels = options.channels;
  p.recognizer = options.recognizer;
  // std::vector<bool> cannot back a span
  auto flags = std::make_unique<bool[]>(seg_y.size());
  std::copy(seg_y.begin(), seg_y.end(), flags.get());
  p.segmenter = svm::train_binary(seg_x, {flags.get(), seg_y.size()}, options.hyperparameters);
  p.classifier = svm::train_multiclass(clf_x, clf_y, options.hyperparameters, options.classes);
  return p;
}

namespace {

json reference_json(const CalibrationReference &r) {
  json j = json::object();
  for (std::size_t p = 0; p < kCalibrationPoses.size(); ++p)
    j[std::string(to_string(kCalibrationPoses[p]))] = r.distances[p];
  return j;
}

CalibrationReference reference_from(const json &j) {
  CalibrationReference r;
  for (std::size_t p = 0; p < kCalibrationPoses.size(); ++p) {
    const auto v = j.at(std::string(to_string(kCalibrationPoses[p]))).get<std::vector<double>>();
    if (v.size() != kSensorCount)
      throw ParseError("calibration reference needs 9 values per pose");
    for (double d : v)
      if (!(d >= 0.0 && d <= kMaxRangeMm))
        throw ParseError("calibration reference value outside [0, 150]");
    std::copy(v.begin(), v.end(), r.distances[p].begin());
  }
  return r;
}

} // namespace

std::string to_json(const Pipeline &p) {
  json j;
  j["format"] = kBundleFormat;
  j["version"] = Pipeline::kFormatVersion;
  std::vector<int> sensors;
  for (int c : p.channels.indices())
    sensors.push_back(c + 1);
  j["channels"] = sensors;
  j["recognizer"] = {{"window", p.recognizer.window}, {"vote", p.recognizer.vote}, {"reset", p.recognizer.reset}};
  j["segmenter"] = svm::model_to_json(p.segmenter);
  j["classifier"] = svm::model_to_json(p.classifier);
  j["metadata"] = json::object();
  if (p.calibration)
    j["metadata"]["calibration_reference"] = reference_json(*p.calibration);
  return j.dump(2);
}

Pipeline pipeline_from_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("malformed pipeline file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer())
    throw ParseError("pipeline file has no integer 'version'");
  if (j["version"].get<int>() != Pipeline::kFormatVersion)
    throw Error(ErrorKind::Version, "unsupported pipeline version " + std::to_string(j["version"].get<int>()) +
                                        " (this build reads " + std::to_string(Pipeline::kFormatVersion) + ")");
  Pipeline p;
  try {
    if (j.at("format").get<std::string>() != kBundleFormat)
      throw ParseError("not a pipeline file");
    std::vector<int> channels;
    for (int s : j.at("channels").get<std::vector<int>>()) {
      if (s < 1 || s > static_cast<int>(kSensorCount))
        throw ParseError("channel S" + std::to_string(s) + " does not exist");
      channels.push_back(s - 1);
    }
    p.channels = ChannelSet(channels);
    const auto &r = j.at("recognizer");
    p.recognizer = {r.at("window").get<int>(), r.at("vote").get<int>(), r.at("reset").get<int>()};
    p.segmenter = svm::model_from_json_value(j.at("segmenter"));
    p.classifier = svm::model_from_json_value(j.at("classifier"));
    if (j.contains("metadata") && j["metadata"].contains("calibration_reference"))
      p.calibration = reference_from(j["metadata"]["calibration_reference"]);
  } catch (const json::exception &e) {
    throw ParseError(std::string("malformed pipeline file: ") + e.what());
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::Input)
      throw ParseError(e.what());
    throw;
  }
  try {
    p.validate();
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::Input)
      throw ParseError(e.what());
    throw;
  }
  return p;
}

void save_pipeline(const Pipeline &p, const std::filesystem::path &path) { write_text_file(path, to_json(p) + "\n"); }

Pipeline load_pipeline(const std::filesystem::path &path) { return pipeline_from_json(read_text_file(path)); }

} // namespace thumbtrak
