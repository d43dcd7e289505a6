#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <optional>

#include "locallearn/errors.hpp"
#include "locallearn/feature_matrix.hpp"
#include "locallearn/io.hpp"
#include "locallearn/mlp.hpp"
#include "locallearn/random.hpp"

namespace testsupport {

#ifndef LOCALLEARN_TEST_DATA
#define LOCALLEARN_TEST_DATA "tests/data"
#endif

// Kind of the locallearn::Error thrown by f, or nullopt if it returns.
template <typename F>
std::optional<locallearn::ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const locallearn::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline std::filesystem::path data_dir() { return LOCALLEARN_TEST_DATA; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("locallearn-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Binary SVM problem with its reference dual objective.
struct QpProblem {
  double C = 1.0;
  double objective = 0.0;
  locallearn::FeatureMatrix X;
  std::vector<int> y;
};

inline std::vector<QpProblem> load_qp_problems() {
  std::ifstream in(data_dir() / "svm_oracle.txt");
  std::vector<QpProblem> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream head(line);
    std::string tag;
    std::size_t n = 0, d = 0;
    QpProblem p;
    head >> tag >> n >> d >> p.C >> p.objective;
    std::vector<std::string> ids;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      std::getline(in, line);
      std::istringstream row(line);
      int y = 0;
      row >> y;
      p.y.push_back(y);
      for (std::size_t k = 0; k < d; ++k) {
        double v = 0;
        row >> v;
        values.push_back(v);
      }
      ids.push_back("q" + std::to_string(i));
    }
    p.X = locallearn::FeatureMatrix(d, std::move(ids), std::move(values));
    out.push_back(std::move(p));
  }
  return out;
}

// Largest relative gap between analytic and central-difference gradients
// over every parameter. Relative error is |a - n| / max(|a|, |n|, floor).
inline double max_gradient_error(locallearn::dsd::MlpModel m, const locallearn::FeatureMatrix& X,
                                 const std::vector<std::size_t>& rows, double h = 1e-5, double floor = 1e-4) {
  auto analytic = locallearn::dsd::Gradients::zeros_like(m);
  locallearn::dsd::loss_and_gradient(m, X, rows, analytic);
  double worst = 0.0;
  auto probe = [&](double& p, double a) {
    const double saved = p;
    p = saved + h;
    const double up = locallearn::dsd::loss(m, X, rows);
    p = saved - h;
    const double down = locallearn::dsd::loss(m, X, rows);
    p = saved;
    const double n = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  };
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    auto& layer = m.layer(l);
    for (std::size_t i = 0; i < layer.weights.size(); ++i) probe(layer.weights[i], analytic.weights[l][i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i) probe(layer.bias[i], analytic.bias[l][i]);
  }
  return worst;
}

// Random small MLP with parameters of order `scale` and a labeled batch.
struct GradientCase {
  locallearn::dsd::MlpModel model;
  locallearn::FeatureMatrix X;
  std::vector<std::size_t> rows;
};

inline GradientCase random_gradient_case(std::uint64_t seed, double scale = 1e-2) {
  locallearn::Rng rng(seed);
  const std::size_t in = 2 + rng.index(6), hidden = 2 + rng.index(12), classes = 2 + rng.index(4);
  const std::size_t n = 4 + rng.index(12);
  auto model = locallearn::dsd::MlpModel::create({in, hidden, classes}, seed);
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    for (double& w : model.layer(l).weights) w = rng.normal(0.0, scale);
    for (double& b : model.layer(l).bias) b = rng.normal(0.0, scale);
  }
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;
  // Rows whose hidden pre-activations sit near a ReLU kink are redrawn, so
  // the finite differences never straddle one.
  const auto& first = model.layer(0);
  std::vector<double> x(in);
  auto near_kink = [&] {
    for (std::size_t j = 0; j < hidden; ++j) {
      double z = first.bias[j];
      for (std::size_t d = 0; d < in; ++d) z += first.weights[j * in + d] * x[d];
      if (std::abs(z) < 1e-3) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    do {
      for (double& v : x) v = rng.normal();
    } while (near_kink());
    ids.push_back("g" + std::to_string(i));
    values.insert(values.end(), x.begin(), x.end());
    labels.push_back(static_cast<int>(rng.index(classes)));
  }
  locallearn::FeatureMatrix X(in, std::move(ids), std::move(values), std::move(labels), classes);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return {std::move(model), std::move(X), std::move(rows)};
}

// Writes train and test rows as a pipeline dataset under `dir`: one feature
// source per entry of `split_dims` (consecutive column blocks), labels,
// splits and a manifest with `extra` appended. Returns the manifest path.
inline std::filesystem::path write_dataset(const std::filesystem::path& dir, const locallearn::FeatureMatrix& train,
                                           const locallearn::FeatureMatrix& test,
                                           const std::vector<std::string>& class_names, const std::string& extra,
                                           std::vector<std::size_t> split_dims = {}) {
  using namespace locallearn;
  if (split_dims.empty()) split_dims = {train.dim()};
  std::filesystem::create_directories(dir);
  LabelList labels;
  std::vector<std::pair<std::string, Split>> splits;
  for (const auto* m : {&train, &test})
    for (std::size_t i = 0; i < m->n_samples(); ++i) {
      labels.emplace_back(m->sample_id(i), class_names.at(static_cast<std::size_t>(m->label(i))));
      splits.emplace_back(m->sample_id(i), m == &train ? Split::Train : Split::Test);
    }
  save_label_file(dir / "labels.csv", labels);
  save_split_file(dir / "splits.csv", splits);
  std::string manifest = "labels = labels.csv\nsplits = splits.csv\n";
  std::size_t offset = 0;
  for (std::size_t s = 0; s < split_dims.size(); ++s) {
    std::vector<std::string> ids;
    std::vector<double> values;
    for (const auto* m : {&train, &test})
      for (std::size_t i = 0; i < m->n_samples(); ++i) {
        ids.push_back(m->sample_id(i));
        const auto row = m->row(i);
        values.insert(values.end(), row.begin() + static_cast<std::ptrdiff_t>(offset),
                      row.begin() + static_cast<std::ptrdiff_t>(offset + split_dims[s]));
      }
    const std::string name = "src" + std::to_string(s);
    save_features(dir / (name + ".csv"), FeatureMatrix(split_dims[s], std::move(ids), std::move(values)));
    manifest += "source." + name + " = " + name + ".csv\n";
    offset += split_dims[s];
  }
  write_file(dir / "manifest.txt", manifest + extra);
  return dir / "manifest.txt";
}

}  // namespace testsupport
