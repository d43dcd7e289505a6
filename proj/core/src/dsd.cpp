#include "locallearn/dsd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "locallearn/errors.hpp"
#include "locallearn/io.hpp"
#include "locallearn/kv_config.hpp"
#include "locallearn/random.hpp"

namespace locallearn::dsd {

void TrainerConfig::validate() const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    fail(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorKind::InvalidArgument, "momentum must lie in [0, 1)");
  if (batch_size == 0) fail(ErrorKind::InvalidArgument, "batch size must be >= 1");
  if (!(lr_decay >= 1.0)) fail(ErrorKind::InvalidArgument, "lr decay factor must be >= 1");
  if (patience == 0) fail(ErrorKind::InvalidArgument, "patience must be >= 1");
}

double Phase::rate_for(std::size_t layer) const {
  if (kind == PhaseKind::Dense || excluded.contains(layer)) return 0.0;
  return layer_rates.empty() ? rate : layer_rates.at(layer);
}

DsdSchedule DsdSchedule::parse(std::string_view text) {
  DsdSchedule s;
  for (const auto& raw : split_list(text, ',')) {
    std::string_view tok = raw;
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (tok.size() < 2) fail(ErrorKind::InvalidArgument, "bad schedule phase '" + std::string(tok) + "'");
    Phase p;
    if (tok.front() == 'D' || tok.front() == 'd') {
      p.kind = PhaseKind::Dense;
      p.epochs = parse_count(tok.substr(1));
    } else if (tok.front() == 'S' || tok.front() == 's') {
      const auto at = tok.find('@');
      if (at == std::string_view::npos)
        fail(ErrorKind::InvalidArgument, "sparse phase '" + std::string(tok) + "' needs @<rate>");
      p.kind = PhaseKind::Sparse;
      p.epochs = parse_count(tok.substr(1, at - 1));
      p.rate = parse_real(tok.substr(at + 1));
    } else {
      fail(ErrorKind::InvalidArgument, "schedule phase '" + std::string(tok) + "' must start with D or S");
    }
    s.phases.push_back(std::move(p));
  }
  s.validate();
  return s;
}

std::string DsdSchedule::to_string() const {
  std::string out;
  for (const auto& p : phases) {
    if (!out.empty()) out += ',';
    out += (p.kind == PhaseKind::Dense ? "D" : "S") + std::to_string(p.epochs);
    if (p.kind == PhaseKind::Sparse) out += "@" + format_real(p.rate);
  }
  return out;
}

std::size_t DsdSchedule::total_epochs() const {
  std::size_t n = 0;
  for (const auto& p : phases) n += p.epochs;
  return n;
}

void DsdSchedule::validate() const {
  if (phases.empty()) fail(ErrorKind::InvalidArgument, "schedule has no phases");
  if (phases.front().kind != PhaseKind::Dense) fail(ErrorKind::InvalidArgument, "schedule must start dense");
  for (const auto& p : phases) {
    if (p.epochs == 0) fail(ErrorKind::InvalidArgument, "schedule phase with zero epochs");
    if (p.kind == PhaseKind::Dense && (p.rate != 0.0 || !p.layer_rates.empty()))
      fail(ErrorKind::InvalidArgument, "dense phase with a sparsity rate");
    auto check = [](double r) {
      if (!(r >= 0.0 && r < 1.0)) fail(ErrorKind::InvalidArgument, "sparsity rate must lie in [0, 1)");
    };
    check(p.rate);
    for (double r : p.layer_rates) check(r);
  }
}

double sgd_step(MlpModel& model, Velocity& velocity, const FeatureMatrix& X, std::span<const std::size_t> rows,
                double learning_rate, double momentum) {
  Gradients g;
  const double batch_loss = loss_and_gradient(model, X, rows, g);
  if (!std::isfinite(batch_loss)) fail(ErrorKind::NonFiniteGradient, "batch loss is not finite");
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (double v : g.weights[l])
      if (!std::isfinite(v)) fail(ErrorKind::NonFiniteGradient, "non-finite gradient in layer " + model.layer(l).name);
    for (double v : g.bias[l])
      if (!std::isfinite(v)) fail(ErrorKind::NonFiniteGradient, "non-finite gradient in layer " + model.layer(l).name);
  }
  if (velocity.weights.size() != model.n_layers()) velocity = Gradients::zeros_like(model);
  auto update = [&](std::vector<double>& p, std::vector<double>& v, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] - learning_rate * grad[i];
      p[i] += v[i];
    }
  };
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    update(model.layer(l).weights, velocity.weights[l], g.weights[l]);
    update(model.layer(l).bias, velocity.bias[l], g.bias[l]);
  }
  for (const auto& L : model.layers())
    for (double v : L.weights)
      if (!std::isfinite(v)) fail(ErrorKind::NonFiniteGradient, "parameters diverged in layer " + L.name);
  return batch_loss;
}

std::vector<std::uint8_t> prune_mask(std::span<const double> weights, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) fail(ErrorKind::InvalidArgument, "sparsity must lie in [0, 1)");
  const auto n_zero = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(weights.size())));
  std::vector<std::uint8_t> mask(weights.size(), 1);
  if (n_zero == 0) return mask;
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_zero - 1), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double x = std::abs(weights[a]), y = std::abs(weights[b]);
                     return x < y || (x == y && a < b);
                   });
  for (std::size_t i = 0; i < n_zero; ++i) mask[order[i]] = 0;
  return mask;
}

void apply_mask(std::span<double> weights, std::span<const std::uint8_t> mask) {
  if (weights.size() != mask.size()) fail(ErrorKind::DimMismatch, "mask size does not match weights");
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (!mask[i]) weights[i] = 0.0;
}

void prune_layer(Layer& layer, double sparsity) {
  apply_mask(layer.weights, prune_mask(layer.weights, sparsity));
}

double zero_fraction(const Layer& layer) {
  if (layer.weights.empty()) return 0.0;
  const auto zeros = std::count(layer.weights.begin(), layer.weights.end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(layer.weights.size());
}

FeatureMatrix augment_flip(const FeatureMatrix& m, std::size_t width) {
  if (width == 0 || m.dim() % width != 0)
    fail(ErrorKind::InvalidArgument, "flip width " + std::to_string(width) + " does not divide dim " +
                                         std::to_string(m.dim()));
  const std::size_t height = m.dim() / width;
  std::vector<std::string> ids(m.sample_ids().begin(), m.sample_ids().end());
  std::vector<double> values(m.values().begin(), m.values().end());
  values.reserve(2 * values.size());
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    ids.push_back(m.sample_id(i) + "#flip");
    const auto row = m.row(i);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) values.push_back(row[y * width + (width - 1 - x)]);
  }
  if (!m.has_labels()) return FeatureMatrix(m.dim(), std::move(ids), std::move(values));
  std::vector<int> labels(m.labels().begin(), m.labels().end());
  labels.insert(labels.end(), m.labels().begin(), m.labels().end());
  return FeatureMatrix(m.dim(), std::move(ids), std::move(values), std::move(labels), m.n_classes());
}

DsdResult dsd_train(MlpModel model, const FeatureMatrix& train_in, const FeatureMatrix& val,
                    const DsdSchedule& schedule, const TrainerConfig& cfg) {
  cfg.validate();
  schedule.validate();
  if (train_in.empty()) fail(ErrorKind::InvalidArgument, "training set is empty");
  const FeatureMatrix augmented = cfg.flip_width ? augment_flip(train_in, cfg.flip_width) : FeatureMatrix{};
  const FeatureMatrix& train = cfg.flip_width ? augmented : train_in;
  const FeatureMatrix& scored = val.empty() ? train : val;

  const std::size_t n = train.n_samples();
  const std::size_t batch = std::min(cfg.batch_size, n);
  Velocity velocity = Gradients::zeros_like(model);
  double lr = cfg.learning_rate;
  double best_acc = -1.0;
  std::size_t stale = 0;

  DsdResult result;
  std::size_t epoch = 0;
  std::vector<std::size_t> order(n);
  for (std::size_t p = 0; p < schedule.phases.size(); ++p) {
    const Phase& phase = schedule.phases[p];
    for (std::size_t e = 0; e < phase.epochs; ++e) {
      ++epoch;
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng = Rng::derive(cfg.seed, epoch);
      rng.shuffle(order);
      double loss_sum = 0.0;
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t end = std::min(start + batch, n);
        const std::span<const std::size_t> rows(order.data() + start, end - start);
        loss_sum += sgd_step(model, velocity, train, rows, lr, cfg.momentum) * static_cast<double>(rows.size());
      }
      if (phase.kind == PhaseKind::Sparse)
        for (std::size_t l = 0; l < model.n_layers(); ++l) {
          const double r = phase.rate_for(l);
          if (r > 0.0) prune_layer(model.layer(l), r);
        }

      EpochLog log;
      log.epoch = epoch;
      log.phase = p;
      log.kind = phase.kind;
      log.learning_rate = lr;
      log.train_loss = loss_sum / static_cast<double>(n);
      log.val_accuracy = accuracy(model, scored);
      for (const auto& L : model.layers()) log.zero_fraction.push_back(zero_fraction(L));
      result.log.push_back(std::move(log));

      const double acc = result.log.back().val_accuracy;
      if (acc > best_acc) {
        best_acc = acc;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        lr /= cfg.lr_decay;
        stale = 0;
      }
    }
  }
  result.model = std::move(model);
  return result;
}

SensitivityTable sensitivity_scan(const MlpModel& model, const FeatureMatrix& val, const std::vector<double>& rates) {
  if (val.empty()) fail(ErrorKind::InvalidArgument, "sensitivity scan needs validation data");
  SensitivityTable t;
  t.rates = rates;
  t.baseline = accuracy(model, val);
  MlpModel work = model;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    t.layers.push_back(model.layer(l).name);
    std::vector<double> row;
    for (double r : rates) {
      prune_layer(work.layer(l), r);
      row.push_back(accuracy(work, val));
      work.layer(l).weights = model.layer(l).weights;
    }
    t.accuracy.push_back(std::move(row));
  }
  return t;
}

std::vector<double> select_rates(const SensitivityTable& table, double threshold_points) {
  constexpr double kEps = 1e-9;
  std::vector<double> out;
  for (const auto& row : table.accuracy) {
    if (row.size() != table.rates.size()) fail(ErrorKind::InvalidArgument, "incomplete sensitivity table");
    double best = 0.0;
    for (std::size_t r = 0; r < row.size(); ++r) {
      const double drop = 100.0 * (table.baseline - row[r]);
      if (drop <= threshold_points + kEps) best = std::max(best, table.rates[r]);
    }
    out.push_back(best);
  }
  return out;
}

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log, const MlpModel& model) {
  out << "epoch,phase,lr,train_loss,val_acc";
  for (const auto& L : model.layers()) out << ",zero_" << L.name;
  out << '\n';
  for (const auto& e : log) {
    out << e.epoch << ',' << (e.kind == PhaseKind::Dense ? 'D' : 'S') << e.phase << ',' << format_real(e.learning_rate)
        << ',' << format_real(e.train_loss) << ',' << format_real(e.val_accuracy);
    for (double z : e.zero_fraction) out << ',' << format_real(z);
    out << '\n';
  }
}

void write_scan_csv(std::ostream& out, const SensitivityTable& table) {
  out << "layer,rate_0";
  for (double r : table.rates) out << ",rate_" << format_real(r);
  out << '\n';
  for (std::size_t l = 0; l < table.layers.size(); ++l) {
    out << table.layers[l] << ',' << format_real(table.baseline);
    for (double a : table.accuracy[l]) out << ',' << format_real(a);
    out << '\n';
  }
}

}  // namespace locallearn::dsd
