#include "locallearn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "locallearn/errors.hpp"
#include "locallearn/io.hpp"
#include "locallearn/kv_config.hpp"
#include "locallearn/random.hpp"

namespace locallearn::dsd {

namespace {

// Activations of every layer for one input; acts[0] is the input itself.
std::vector<std::vector<double>> forward(const std::vector<Layer>& layers, std::span<const double> x) {
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& L = layers[l];
    const auto& a = acts.back();
    std::vector<double> z(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double* w = L.weights.data() + o * L.in;
      double s = L.bias[o];
      for (std::size_t i = 0; i < L.in; ++i) s += w[i] * a[i];
      z[o] = (l + 1 < layers.size()) ? std::max(s, 0.0) : s;
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

// -log softmax(z)[y]; overwrites z with softmax(z).
double softmax_xent(std::vector<double>& z, int y) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return -std::log(z[static_cast<std::size_t>(y)]);
}

void require_compatible(const MlpModel& m, const FeatureMatrix& X) {
  if (m.n_layers() == 0) fail(ErrorKind::InvalidArgument, "model has no layers");
  if (X.dim() != m.input_dim())
    fail(ErrorKind::DimMismatch, "features have dim " + std::to_string(X.dim()) + ", model expects " +
                                     std::to_string(m.input_dim()));
  if (!X.has_labels()) fail(ErrorKind::MissingLabels, "training data has no labels");
  if (X.n_classes() > m.n_classes())
    fail(ErrorKind::InvalidArgument, "data has more classes than the model outputs");
}

}  // namespace

MlpModel::MlpModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) fail(ErrorKind::InvalidArgument, "model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    if (L.in == 0 || L.out == 0 || L.weights.size() != L.in * L.out || L.bias.size() != L.out)
      fail(ErrorKind::DimMismatch, "layer '" + L.name + "' has inconsistent shapes");
    if (l > 0 && layers_[l - 1].out != L.in)
      fail(ErrorKind::DimMismatch, "layer '" + L.name + "' input does not match previous output");
    for (double v : L.weights)
      if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "non-finite weight in layer '" + L.name + "'");
    for (double v : L.bias)
      if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "non-finite bias in layer '" + L.name + "'");
  }
}

MlpModel MlpModel::create(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) fail(ErrorKind::InvalidArgument, "model needs input and output sizes");
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer L;
    L.name = "fc" + std::to_string(l + 1);
    L.in = sizes[l];
    L.out = sizes[l + 1];
    if (L.in == 0 || L.out == 0) fail(ErrorKind::InvalidArgument, "layer sizes must be >= 1");
    const double sd = std::sqrt(2.0 / static_cast<double>(L.in));
    L.weights.resize(L.in * L.out);
    for (double& w : L.weights) w = rng.normal(0.0, sd);
    L.bias.assign(L.out, 0.0);
    layers.push_back(std::move(L));
  }
  return MlpModel(std::move(layers));
}

std::size_t MlpModel::n_parameters() const {
  std::size_t n = 0;
  for (const auto& L : layers_) n += L.weights.size() + L.bias.size();
  return n;
}

std::vector<double> MlpModel::logits(std::span<const double> x) const {
  if (x.size() != input_dim()) fail(ErrorKind::DimMismatch, "input has wrong dim");
  return forward(layers_, x).back();
}

int MlpModel::predict(std::span<const double> x) const {
  const auto z = logits(x);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

Gradients Gradients::zeros_like(const MlpModel& m) {
  Gradients g;
  for (const auto& L : m.layers()) {
    g.weights.emplace_back(L.weights.size(), 0.0);
    g.bias.emplace_back(L.bias.size(), 0.0);
  }
  return g;
}

double loss(const MlpModel& m, const FeatureMatrix& X, std::span<const std::size_t> rows) {
  require_compatible(m, X);
  if (rows.empty()) fail(ErrorKind::InvalidArgument, "loss over an empty batch");
  double total = 0.0;
  for (std::size_t r : rows) {
    auto z = forward(m.layers(), X.row(r)).back();
    total += softmax_xent(z, X.label(r));
  }
  return total / static_cast<double>(rows.size());
}

double loss_and_gradient(const MlpModel& m, const FeatureMatrix& X, std::span<const std::size_t> rows,
                         Gradients& grad) {
  require_compatible(m, X);
  if (rows.empty()) fail(ErrorKind::InvalidArgument, "gradient over an empty batch");
  grad = Gradients::zeros_like(m);
  const auto& layers = m.layers();
  const double scale = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (std::size_t r : rows) {
    auto acts = forward(layers, X.row(r));
    auto delta = acts.back();
    total += softmax_xent(delta, X.label(r));
    delta[static_cast<std::size_t>(X.label(r))] -= 1.0;
    for (double& d : delta) d *= scale;
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Layer& L = layers[l];
      const auto& a = acts[l];
      auto& gw = grad.weights[l];
      auto& gb = grad.bias[l];
      for (std::size_t o = 0; o < L.out; ++o) {
        if (delta[o] == 0.0) continue;
        gb[o] += delta[o];
        double* row = gw.data() + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) row[i] += delta[o] * a[i];
      }
      if (l == 0) break;
      std::vector<double> prev(L.in, 0.0);
      for (std::size_t o = 0; o < L.out; ++o) {
        if (delta[o] == 0.0) continue;
        const double* w = L.weights.data() + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) prev[i] += w[i] * delta[o];
      }
      // ReLU derivative: acts[l] holds post-activation values of layer l - 1.
      for (std::size_t i = 0; i < L.in; ++i)
        if (a[i] <= 0.0) prev[i] = 0.0;
      delta = std::move(prev);
    }
  }
  return total * scale;
}

double accuracy(const MlpModel& m, const FeatureMatrix& X) {
  if (X.empty()) return 0.0;
  require_compatible(m, X);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < X.n_samples(); ++i)
    if (m.predict(X.row(i)) == X.label(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(X.n_samples());
}

void write_mlp(std::ostream& out, const MlpModel& m) {
  out << "#locallearn-mlp v1 layers=" << m.n_layers() << '\n';
  for (const auto& L : m.layers()) {
    out << "layer " << L.name << ' ' << L.in << ' ' << L.out << '\n';
    for (std::size_t o = 0; o < L.out; ++o) {
      for (std::size_t i = 0; i < L.in; ++i) out << (i ? " " : "") << format_real(L.weights[o * L.in + i]);
      out << '\n';
    }
    for (std::size_t o = 0; o < L.out; ++o) out << (o ? " " : "") << format_real(L.bias[o]);
    out << '\n';
  }
}

namespace {

MlpModel read_mlp_unchecked(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) fail(ErrorKind::MalformedFile, "model file truncated after line " + std::to_string(line_no));
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  auto reals = [&](std::size_t n) {
    std::istringstream ss(next());
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) v.push_back(parse_real(tok));
    if (v.size() != n)
      fail(ErrorKind::MalformedFile, "model line " + std::to_string(line_no) + " has " + std::to_string(v.size()) +
                                         " values, expected " + std::to_string(n));
    return v;
  };
  const std::string header = next();
  const std::string prefix = "#locallearn-mlp v1 layers=";
  if (header.rfind(prefix, 0) != 0) fail(ErrorKind::MalformedFile, "bad model header '" + header + "'");
  const std::size_t n_layers = parse_count(header.substr(prefix.size()));
  std::vector<Layer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::istringstream ss(next());
    std::string tag, in_s, out_s;
    Layer L;
    if (!(ss >> tag >> L.name >> in_s >> out_s) || tag != "layer")
      fail(ErrorKind::MalformedFile, "expected layer line at model line " + std::to_string(line_no));
    L.in = parse_count(in_s);
    L.out = parse_count(out_s);
    for (std::size_t o = 0; o < L.out; ++o) {
      auto row = reals(L.in);
      L.weights.insert(L.weights.end(), row.begin(), row.end());
    }
    L.bias = reals(L.out);
    layers.push_back(std::move(L));
  }
  return MlpModel(std::move(layers));
}

}  // namespace

MlpModel read_mlp(std::istream& in) {
  try {
    return read_mlp_unchecked(in);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) fail(ErrorKind::MalformedFile, e.what());
    throw;
  }
}

void save_mlp(const std::filesystem::path& path, const MlpModel& m) {
  std::ostringstream out;
  write_mlp(out, m);
  write_text_file(path, out.str());
}

MlpModel load_mlp(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return read_mlp(in);
}

}  // namespace locallearn::dsd
