#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "locallearn/feature_matrix.hpp"
#include "locallearn/mlp.hpp"

namespace locallearn::dsd {

struct TrainerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 512;  // clamped to the training set size
  double lr_decay = 10.0;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  /// Mirror image-backed rows horizontally and append them. Rows are read
  /// as row-major images of this width; 0 disables augmentation.
  std::size_t flip_width = 0;

  void validate() const;
};

enum class PhaseKind { Dense, Sparse };

struct Phase {
  PhaseKind kind = PhaseKind::Dense;
  std::size_t epochs = 0;
  double rate = 0.0;
  /// Per-layer rates overriding `rate` when non-empty.
  std::vector<double> layer_rates;
  std::set<std::size_t> excluded;

  double rate_for(std::size_t layer) const;
  bool operator==(const Phase&) const = default;
};

struct DsdSchedule {
  std::vector<Phase> phases;

  /// "D<epochs>" or "S<epochs>@<rate>", comma separated, e.g. "D30,S10@0.3,D10".
  static DsdSchedule parse(std::string_view text);
  std::string to_string() const;
  std::size_t total_epochs() const;
  void validate() const;
  bool operator==(const DsdSchedule&) const = default;
};

/// Momentum buffers, same shapes as the model.
using Velocity = Gradients;

/// One momentum SGD update on the mean cross-entropy of `rows`:
/// v <- momentum * v - lr * g; p <- p + v. Returns the batch loss.
/// Throws NonFiniteGradient.
double sgd_step(MlpModel& model, Velocity& velocity, const FeatureMatrix& X, std::span<const std::size_t> rows,
                double learning_rate, double momentum);

/// 0 for the floor(sparsity * n) smallest-magnitude entries (ties to the
/// lower index), 1 elsewhere. Throws InvalidArgument unless 0 <= s < 1.
std::vector<std::uint8_t> prune_mask(std::span<const double> weights, double sparsity);
void apply_mask(std::span<double> weights, std::span<const std::uint8_t> mask);
/// Zero the smallest weights of one layer in place (bias untouched).
void prune_layer(Layer& layer, double sparsity);
double zero_fraction(const Layer& layer);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based, across phases
  std::size_t phase = 0;  // 0-based phase index
  PhaseKind kind = PhaseKind::Dense;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  std::vector<double> zero_fraction;  // per layer, after the epoch
};

struct DsdResult {
  MlpModel model;
  std::vector<EpochLog> log;
};

/// Runs the schedule from `model`. Sparse phases prune every non-excluded
/// layer at the end of each of their epochs. The learning rate is divided by
/// cfg.lr_decay after cfg.patience epochs without a new best validation
/// accuracy. `val` may be empty, in which case the training set is scored.
DsdResult dsd_train(MlpModel model, const FeatureMatrix& train, const FeatureMatrix& val,
                    const DsdSchedule& schedule, const TrainerConfig& cfg);

/// Horizontally mirrored copy of each row appended after the originals,
/// ids suffixed with "#flip". Throws InvalidArgument when width does not
/// divide the dim.
FeatureMatrix augment_flip(const FeatureMatrix& m, std::size_t width);

inline const std::vector<double> kScanRates{0.3, 0.4, 0.5, 0.6};

struct SensitivityTable {
  std::vector<std::string> layers;
  std::vector<double> rates;
  double baseline = 0.0;
  /// accuracy[layer][rate index]
  std::vector<std::vector<double>> accuracy;
};

/// Accuracy with one layer pruned at one rate, all others untouched.
SensitivityTable sensitivity_scan(const MlpModel& model, const FeatureMatrix& val,
                                  const std::vector<double>& rates = kScanRates);

/// Per layer, the largest rate whose accuracy stays within `threshold_points`
/// percentage points of the baseline; 0 when no rate qualifies.
std::vector<double> select_rates(const SensitivityTable& table, double threshold_points = 0.5);

/// epoch,phase,lr,train_loss,val_acc,zero_<layer>...
void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log, const MlpModel& model);
/// layer,rate_0,rate_<r>...
void write_scan_csv(std::ostream& out, const SensitivityTable& table);

}  // namespace locallearn::dsd
