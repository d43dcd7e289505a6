#include "locallearn/svm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "locallearn/errors.hpp"
#include "locallearn/io.hpp"
#include "locallearn/kv_config.hpp"
#include "locallearn/parallel.hpp"
#include "locallearn/random.hpp"

namespace locallearn::svm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

void SvmConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) fail(ErrorKind::InvalidArgument, "SVM C must be positive");
  if (!(tolerance > 0.0)) fail(ErrorKind::InvalidArgument, "SVM tolerance must be positive");
  if (max_passes == 0) fail(ErrorKind::InvalidArgument, "SVM max_passes must be >= 1");
}

double decision(const SvmModel& m, std::span<const double> x) {
  if (x.size() != m.w.size())
    fail(ErrorKind::DimMismatch, "query dim " + std::to_string(x.size()) + " != model dim " +
                                     std::to_string(m.w.size()));
  return dot(m.w.data(), x.data(), x.size()) + m.b;
}

BinarySolution solve_binary(const FeatureMatrix& X, std::span<const std::size_t> rows,
                            std::span<const int> y, const SvmConfig& cfg) {
  cfg.validate();
  const std::size_t n = rows.size();
  const std::size_t dim = X.dim();
  if (n == 0) fail(ErrorKind::InvalidArgument, "SVM needs at least one training row");
  if (y.size() != n) fail(ErrorKind::DimMismatch, "label count != row count");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1)
      has_pos = true;
    else if (v == -1)
      has_neg = true;
    else
      fail(ErrorKind::InvalidArgument, "binary labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) fail(ErrorKind::SingleClass, "binary SVM needs both +1 and -1 labels");

  std::vector<const double*> x(n);
  std::vector<double> qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i] >= X.n_samples()) fail(ErrorKind::InvalidArgument, "row index out of range");
    x[i] = X.row(rows[i]).data();
    qii[i] = dot(x[i], x[i], dim) + 1.0;  // +1 from the bias feature
  }

  const double C = cfg.C;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(dim, 0.0);
  double wb = 0.0;

  std::vector<std::size_t> active = all_rows(n);
  double pg_max_old = kInf;
  double pg_min_old = -kInf;
  Rng rng(cfg.seed);

  BinarySolution out;
  std::size_t pass = 0;
  double spread = kInf;
  for (; pass < cfg.max_passes; ++pass) {
    rng.shuffle(active);
    double pg_max = -kInf;
    double pg_min = kInf;
    std::size_t end = active.size();
    for (std::size_t s = 0; s < end;) {
      const std::size_t i = active[s];
      const double yi = y[i];
      const double g = yi * (dot(w.data(), x[i], dim) + wb) - 1.0;
      double pg = 0.0;
      if (alpha[i] == 0.0) {
        if (cfg.shrinking && g > pg_max_old) {
          std::swap(active[s], active[--end]);
          continue;
        }
        if (g < 0.0) pg = g;
      } else if (alpha[i] == C) {
        if (cfg.shrinking && g < pg_min_old) {
          std::swap(active[s], active[--end]);
          continue;
        }
        if (g > 0.0) pg = g;
      } else {
        pg = g;
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::min(std::max(old - g / qii[i], 0.0), C);
        const double d = (alpha[i] - old) * yi;
        for (std::size_t k = 0; k < dim; ++k) w[k] += d * x[i][k];
        wb += d;
      }
      ++s;
    }
    active.resize(end);

    spread = std::max(pg_max, 0.0) - std::min(pg_min, 0.0);
    if (active.empty()) spread = 0.0;
    if (spread <= cfg.tolerance) {
      if (active.size() == n) {
        out.converged = true;
        ++pass;
        break;
      }
      // Converged on the shrunk set; verify on everything.
      active = all_rows(n);
      pg_max_old = kInf;
      pg_min_old = -kInf;
      continue;
    }
    pg_max_old = pg_max <= 0.0 ? kInf : pg_max;
    pg_min_old = pg_min >= 0.0 ? -kInf : pg_min;
  }

  out.passes = pass;
  out.kkt_violation = spread;
  out.model.w = std::move(w);
  out.model.b = wb;
  out.dual_objective = dual_objective(X, rows, y, alpha);
  out.alpha = std::move(alpha);
  return out;
}

BinarySolution solve_binary(const FeatureMatrix& X, std::span<const int> y, const SvmConfig& cfg) {
  const auto rows = all_rows(X.n_samples());
  return solve_binary(X, rows, y, cfg);
}

double dual_objective(const FeatureMatrix& X, std::span<const std::size_t> rows, std::span<const int> y,
                      std::span<const double> alpha) {
  std::vector<double> w(X.dim(), 0.0);
  double wb = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto xi = X.row(rows[i]);
    const double c = alpha[i] * y[i];
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += c * xi[k];
    wb += c;
    sum += alpha[i];
  }
  return sum - 0.5 * (dot(w.data(), w.data(), w.size()) + wb * wb);
}

OvaModel::OvaModel(std::size_t n_classes, std::size_t dim) : dim_(dim), models_(n_classes) {}

void OvaModel::set_model(int class_id, SvmModel m) {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= models_.size())
    fail(ErrorKind::InvalidArgument, "class id out of range");
  if (m.w.size() != dim_) fail(ErrorKind::DimMismatch, "model dim does not match OvA dim");
  for (double v : m.w)
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "non-finite SVM weight");
  if (!std::isfinite(m.b)) fail(ErrorKind::NonFiniteValue, "non-finite SVM bias");
  models_[static_cast<std::size_t>(class_id)] = std::move(m);
}

void OvaModel::set_sole_class(int class_id) {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= models_.size())
    fail(ErrorKind::InvalidArgument, "class id out of range");
  for (auto& m : models_) m.reset();
  sole_class_ = class_id;
}

bool OvaModel::is_trained(int class_id) const {
  return models_.at(static_cast<std::size_t>(class_id)).has_value() || sole_class_ == class_id;
}

std::vector<int> OvaModel::trained_classes() const {
  std::vector<int> out;
  for (std::size_t c = 0; c < models_.size(); ++c)
    if (is_trained(static_cast<int>(c))) out.push_back(static_cast<int>(c));
  return out;
}

std::vector<double> OvaModel::decisions(std::span<const double> x) const {
  if (x.size() != dim_)
    fail(ErrorKind::DimMismatch, "query dim " + std::to_string(x.size()) + " != model dim " +
                                     std::to_string(dim_));
  std::vector<double> out(models_.size(), -kInf);
  if (sole_class_) {
    out[static_cast<std::size_t>(*sole_class_)] = kInf;
    return out;
  }
  for (std::size_t c = 0; c < models_.size(); ++c)
    if (models_[c]) out[c] = decision(*models_[c], x);
  return out;
}

OvaModel train_ova(const FeatureMatrix& X, std::span<const std::size_t> rows, const SvmConfig& cfg,
                   std::size_t workers) {
  if (!X.has_labels()) fail(ErrorKind::MissingLabels, "OvA training needs labeled data");
  if (rows.empty()) fail(ErrorKind::InvalidArgument, "OvA training needs at least one row");
  cfg.validate();

  std::vector<char> present(X.n_classes(), 0);
  for (std::size_t r : rows) present[static_cast<std::size_t>(X.label(r))] = 1;
  std::vector<int> classes;
  for (std::size_t c = 0; c < present.size(); ++c)
    if (present[c]) classes.push_back(static_cast<int>(c));

  OvaModel model(X.n_classes(), X.dim());
  if (classes.size() == 1) {
    model.set_sole_class(classes.front());
    return model;
  }

  std::vector<SvmModel> fitted(classes.size());
  parallel_for(classes.size(), workers, [&](std::size_t k) {
    const int c = classes[k];
    std::vector<int> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = X.label(rows[i]) == c ? 1 : -1;
    SvmConfig class_cfg = cfg;
    class_cfg.seed = Rng::mix(cfg.seed, static_cast<std::uint64_t>(c));
    fitted[k] = solve_binary(X, rows, y, class_cfg).model;
  });
  for (std::size_t k = 0; k < classes.size(); ++k) model.set_model(classes[k], std::move(fitted[k]));
  return model;
}

OvaModel train_ova(const FeatureMatrix& X, const SvmConfig& cfg, std::size_t workers) {
  const auto rows = all_rows(X.n_samples());
  return train_ova(X, rows, cfg, workers);
}

int argmax_decision(std::span<const double> decisions) {
  int best = -1;
  for (std::size_t c = 0; c < decisions.size(); ++c) {
    if (decisions[c] == -kInf) continue;
    if (best < 0 || decisions[c] > decisions[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  if (best < 0) fail(ErrorKind::NoTrainedClasses, "no trained class to predict from");
  return best;
}

Prediction predict_ova(const OvaModel& m, std::span<const double> x) {
  Prediction p;
  p.decisions = m.decisions(x);
  p.label = argmax_decision(p.decisions);
  return p;
}

void write_ova(std::ostream& out, const OvaModel& m) {
  out << "#locallearn-ova v1 dim=" << m.dim() << " classes=" << m.n_classes() << '\n';
  if (auto sole = m.sole_class()) {
    out << *sole << " +inf\n";
    return;
  }
  for (int c : m.trained_classes()) {
    const auto& model = *m.model(c);
    out << c << ' ' << format_real(model.b);
    for (double v : model.w) out << ' ' << format_real(v);
    out << '\n';
  }
}

namespace {

OvaModel read_ova_unchecked(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("#locallearn-ova v1"))
    fail(ErrorKind::MalformedFile, "missing '#locallearn-ova v1' header");
  std::istringstream header(line.substr(std::string_view("#locallearn-ova v1").size()));
  std::size_t dim = 0, classes = 0;
  bool have_dim = false, have_classes = false;
  std::string tok;
  while (header >> tok) {
    if (tok.starts_with("dim=")) {
      dim = parse_count(tok.substr(4));
      have_dim = true;
    } else if (tok.starts_with("classes=")) {
      classes = parse_count(tok.substr(8));
      have_classes = true;
    }
  }
  if (!have_dim || !have_classes) fail(ErrorKind::MalformedFile, "OvA header needs dim= and classes=");

  OvaModel m(classes, dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    while (ls >> tok) fields.push_back(tok);
    if (fields.empty()) continue;
    const int c = static_cast<int>(parse_count(fields.at(0)));
    if (static_cast<std::size_t>(c) >= classes) fail(ErrorKind::MalformedFile, "class id out of range in model");
    if (fields.size() == 2 && fields[1] == "+inf") {
      m.set_sole_class(c);
      continue;
    }
    if (fields.size() != dim + 2)
      fail(ErrorKind::DimMismatch, "model line for class " + std::to_string(c) + " has wrong length");
    SvmModel sm;
    sm.b = parse_real(fields[1]);
    sm.w.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) sm.w.push_back(parse_real(fields[k + 2]));
    m.set_model(c, std::move(sm));
  }
  return m;
}

}  // namespace

OvaModel read_ova(std::istream& in) {
  try {
    return read_ova_unchecked(in);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) fail(ErrorKind::MalformedFile, e.what());
    throw;
  }
}

void save_ova(const std::filesystem::path& path, const OvaModel& m) {
  std::ostringstream out;
  write_ova(out, m);
  write_text_file(path, out.str());
}

OvaModel load_ova(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return read_ova(in);
}

}  // namespace locallearn::svm
