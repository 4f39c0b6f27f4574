#include "linear_svm.hpp"

#include "errors.hpp"
#include "json_codec.hpp"
#include "rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace thumbtrak::svm {

void Samples::push(std::span<const double> row) {
  if (dim_ == 0 && data_.empty())
    dim_ = row.size();
  if (row.size() != dim_)
    throw Error(ErrorKind::Dimension,
                "sample has " + std::to_string(row.size()) + " features, expected " + std::to_string(dim_));
  data_.insert(data_.end(), row.begin(), row.end());
}

Scaler Scaler::fit(const Samples &x) {
  const std::size_t d = x.dim();
  const std::size_t n = x.size();
  Scaler s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, kMinStd);
  if (n == 0)
    return s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j)
      s.mean[j] += r[j];
  }
  for (auto &m : s.mean)
    m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = r[j] - s.mean[j];
      var[j] += dv * dv;
    }
  }
  for (std::size_t j = 0; j < d; ++j)
    s.stddev[j] = std::max(kMinStd, std::sqrt(var[j] / static_cast<double>(n)));
  return s;
}

std::vector<double> Scaler::transform(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = (x[j] - mean[j]) / stddev[j];
  return out;
}

Samples Scaler::transform(const Samples &x) const {
  Samples out(x.dim());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.push(transform(x.row(i)));
  return out;
}

double dual_objective(const DualSolution &s) {
  double wsq = s.bias * s.bias;
  for (double w : s.weights)
    wsq += w * w;
  return std::accumulate(s.alpha.begin(), s.alpha.end(), 0.0) - 0.5 * wsq;
}

DualSolution solve_dual_cd(const Samples &x, std::span<const double> labels, const Hyperparameters &hp,
                           bool record_objective) {
  const std::size_t n = x.size();
  const std::size_t d = x.dim();
  if (labels.size() != n)
    throw Error(ErrorKind::Input, "label count does not match sample count");
  if (!(hp.C > 0.0))
    throw Error(ErrorKind::Training, "regularization constant C must be positive");

  DualSolution sol;
  sol.weights.assign(d, 0.0);
  sol.alpha.assign(n, 0.0);

  // Diagonal of Q including the constant bias feature.
  std::vector<double> qii(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (double v : x.row(i))
      qii[i] += v * v;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hp.seed);

  for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double max_step = 0.0;
    for (std::size_t i : order) {
      const auto xi = x.row(i);
      const double yi = labels[i];
      double margin = sol.bias;
      for (std::size_t j = 0; j < d; ++j)
        margin += sol.weights[j] * xi[j];
      const double g = yi * margin - 1.0;

      const double a = sol.alpha[i];
      double pg = g;
      if (a <= 0.0)
        pg = std::min(g, 0.0);
      else if (a >= hp.C)
        pg = std::max(g, 0.0);
      if (std::fabs(pg) <= 1e-12)
        continue;

      const double next = std::clamp(a - g / qii[i], 0.0, hp.C);
      const double delta = next - a;
      if (delta == 0.0)
        continue;
      sol.alpha[i] = next;
      const double step = delta * yi;
      for (std::size_t j = 0; j < d; ++j)
        sol.weights[j] += step * xi[j];
      sol.bias += step;
      max_step = std::max(max_step, std::fabs(delta));
    }
    sol.epochs = epoch + 1;
    if (record_objective)
      sol.objective_trace.push_back(dual_objective(sol));
    if (max_step < hp.tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

std::vector<double> LinearModel::scores(std::span<const double> x) const {
  if (x.size() != feature_dim())
    throw Error(ErrorKind::Dimension, "model expects " + std::to_string(feature_dim()) + " features, got " +
                                          std::to_string(x.size()));
  const auto z = scaler.transform(x);
  std::vector<double> out(weights.size());
  for (std::size_t c = 0; c < weights.size(); ++c) {
    double s = biases[c];
    for (std::size_t j = 0; j < z.size(); ++j)
      s += weights[c][j] * z[j];
    out[c] = s;
  }
  return out;
}

Prediction LinearModel::predict(std::span<const double> x) const {
  Prediction p;
  p.scores = scores(x);
  if (kind == ModelKind::Binary) {
    p.is_pose = p.scores[0] >= 0.0;
    return p;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.scores.size(); ++c)
    if (p.scores[c] > p.scores[best])
      best = c;
  p.class_index = best;
  p.label = classes[best];
  p.is_pose = true;
  return p;
}

LinearModel train_binary(const Samples &x, std::span<const bool> positive, const Hyperparameters &hp) {
  if (positive.size() != x.size())
    throw Error(ErrorKind::Input, "label count does not match sample count");
  const auto npos = std::count(positive.begin(), positive.end(), true);
  if (npos == 0 || npos == static_cast<std::ptrdiff_t>(positive.size()))
    throw Error(ErrorKind::Training, "binary training needs both positive and negative samples");

  LinearModel m;
  m.kind = ModelKind::Binary;
  m.hyperparameters = hp;
  m.scaler = Scaler::fit(x);
  const Samples z = m.scaler.transform(x);
  std::vector<double> y(positive.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = positive[i] ? 1.0 : -1.0;
  auto sol = solve_dual_cd(z, y, hp);
  m.weights.push_back(std::move(sol.weights));
  m.biases.push_back(sol.bias);
  m.metadata.epochs.push_back(sol.epochs);
  m.metadata.converged.push_back(sol.converged);
  return m;
}

LinearModel train_multiclass(const Samples &x, std::span<const Pose> labels, const Hyperparameters &hp,
                             std::optional<std::vector<Pose>> classes) {
  if (labels.size() != x.size())
    throw Error(ErrorKind::Input, "label count does not match sample count");
  std::array<std::size_t, kLabelCount> counts{};
  for (Pose p : labels)
    ++counts[index_of(p)];

  std::vector<Pose> cls;
  if (classes) {
    cls = *classes;
    for (Pose c : cls)
      if (counts[index_of(c)] == 0)
        throw Error(ErrorKind::Training, "class '" + std::string(to_string(c)) + "' has no training samples");
    for (Pose p : labels)
      if (std::find(cls.begin(), cls.end(), p) == cls.end())
        throw Error(ErrorKind::Training, "sample labeled '" + std::string(to_string(p)) + "' is not in the class list");
  } else {
    for (Pose p : kAllLabels)
      if (counts[index_of(p)] > 0)
        cls.push_back(p);
  }
  if (cls.size() < 2)
    throw Error(ErrorKind::Training, "multiclass training needs at least two classes");

  LinearModel m;
  m.kind = ModelKind::Multiclass;
  m.classes = cls;
  m.hyperparameters = hp;
  m.scaler = Scaler::fit(x);
  const Samples z = m.scaler.transform(x);
  std::vector<double> y(labels.size());
  for (Pose c : cls) {
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = labels[i] == c ? 1.0 : -1.0;
    auto sol = solve_dual_cd(z, y, hp);
    m.weights.push_back(std::move(sol.weights));
    m.biases.push_back(sol.bias);
    m.metadata.epochs.push_back(sol.epochs);
    m.metadata.converged.push_back(sol.converged);
  }
  return m;
}

// ---- serialization -------------------------------------------------------

namespace {
constexpr const char *kModelFormat = "thumbtrak-linear-model";
}

nlohmann::json model_to_json(const LinearModel &m) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = LinearModel::kFormatVersion;
  j["kind"] = m.kind == ModelKind::Binary ? "binary" : "multiclass";
  auto &cls = j["classes"] = nlohmann::json::array();
  for (Pose p : m.classes)
    cls.push_back(std::string(to_string(p)));
  j["feature_dim"] = m.feature_dim();
  j["weights"] = m.weights;
  j["biases"] = m.biases;
  j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.stddev}};
  j["hyperparameters"] = {{"C", m.hyperparameters.C},
                          {"tol", m.hyperparameters.tol},
                          {"max_epochs", m.hyperparameters.max_epochs},
                          {"seed", m.hyperparameters.seed}};
  j["metadata"] = {{"epochs", m.metadata.epochs}, {"converged", m.metadata.converged}};
  return j;
}

LinearModel model_from_json_value(const nlohmann::json &j) {
  if (!j.is_object())
    throw ParseError("model document must be a JSON object");
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw ParseError("model document has no integer 'version'");
  const int version = j["version"].get<int>();
  if (version != LinearModel::kFormatVersion)
    throw Error(ErrorKind::Version, "unsupported model version " + std::to_string(version) + " (this build reads " +
                                        std::to_string(LinearModel::kFormatVersion) + ")");
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      throw ParseError("not a linear model document");
    LinearModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "binary")
      m.kind = ModelKind::Binary;
    else if (kind == "multiclass")
      m.kind = ModelKind::Multiclass;
    else
      throw ParseError("unknown model kind '" + kind + "'");
    for (const auto &c : j.at("classes")) {
      auto p = pose_from_string(c.get<std::string>());
      if (!p)
        throw ParseError("unknown class '" + c.get<std::string>() + "'");
      m.classes.push_back(*p);
    }
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<double>>();
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.stddev = j.at("scaler").at("std").get<std::vector<double>>();
    const auto &hp = j.at("hyperparameters");
    m.hyperparameters.C = hp.at("C").get<double>();
    m.hyperparameters.tol = hp.at("tol").get<double>();
    m.hyperparameters.max_epochs = hp.at("max_epochs").get<int>();
    m.hyperparameters.seed = hp.at("seed").get<std::uint64_t>();
    if (j.contains("metadata")) {
      m.metadata.epochs = j["metadata"].value("epochs", std::vector<int>{});
      m.metadata.converged = j["metadata"].value("converged", std::vector<bool>{});
    }

    const std::size_t dim = j.at("feature_dim").get<std::size_t>();
    const std::size_t rows = m.kind == ModelKind::Binary ? 1 : m.classes.size();
    if (m.kind == ModelKind::Multiclass && rows < 2)
      throw ParseError("multiclass model needs at least two classes");
    if (m.weights.size() != rows || m.biases.size() != rows)
      throw ParseError("weights/biases do not match the class list");
    for (const auto &w : m.weights)
      if (w.size() != dim)
        throw ParseError("weight row length does not match feature_dim");
    if (m.scaler.mean.size() != dim || m.scaler.stddev.size() != dim)
      throw ParseError("scaler length does not match feature_dim");
    for (double s : m.scaler.stddev)
      if (!(s > 0.0))
        throw ParseError("scaler standard deviation must be positive");
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

std::string to_json(const LinearModel &m) { return model_to_json(m).dump(2); }

LinearModel model_from_json(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("model document is not valid JSON: ") + e.what());
  }
  return model_from_json_value(j);
}

void save_model(const LinearModel &m, const std::filesystem::path &path) {
  write_text_file(path, to_json(m) + "\n");
}

LinearModel load_model(const std::filesystem::path &path) { return model_from_json(read_text_file(path)); }

} // namespace thumbtrak::svm
