#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "locallearn/feature_matrix.hpp"

namespace locallearn::svm {

struct SvmConfig {
  double C = 1.0;
  /// Stop when max(PG, 0) - min(PG, 0) over all dual variables falls below
  /// this (PG: projected gradient).
  double tolerance = 1e-4;
  std::size_t max_passes = 10000;
  std::uint64_t seed = 0;
  bool shrinking = true;

  void validate() const;
};

/// Hyperplane w.x + b.
struct SvmModel {
  std::vector<double> w;
  double b = 0.0;

  bool operator==(const SvmModel&) const = default;
};

/// w.x + b. Throws DimMismatch.
double decision(const SvmModel& m, std::span<const double> x);

/// Full output of the dual solver, for callers that need the certificate.
///
/// The solver works on the L1-hinge soft-margin problem with the bias folded
/// into the weights through a constant feature of 1 (so the bias is
/// regularized). Dual:
///
///   max  sum(alpha) - 1/2 || sum_i alpha_i y_i [x_i; 1] ||^2,  0 <= alpha_i <= C
struct BinarySolution {
  SvmModel model;
  std::vector<double> alpha;   // one per training row, in input order
  double dual_objective = 0.0;
  double kkt_violation = 0.0;  // projected-gradient spread at exit
  std::size_t passes = 0;
  bool converged = false;
};

/// Dual coordinate ascent with a random permutation per pass and shrinking.
/// `rows` selects the training rows of X (in that order); y holds +1/-1 per
/// selected row. Throws SingleClass, DimMismatch, InvalidArgument.
BinarySolution solve_binary(const FeatureMatrix& X, std::span<const std::size_t> rows,
                            std::span<const int> y, const SvmConfig& cfg);
BinarySolution solve_binary(const FeatureMatrix& X, std::span<const int> y, const SvmConfig& cfg);

inline SvmModel train_binary(const FeatureMatrix& X, std::span<const int> y, const SvmConfig& cfg) {
  return solve_binary(X, y, cfg).model;
}

/// Dual objective of `alpha` recomputed from scratch.
double dual_objective(const FeatureMatrix& X, std::span<const std::size_t> rows, std::span<const int> y,
                      std::span<const double> alpha);

/// One-versus-all collection of binary models, indexed by class id.
///
/// A class is either trained (has a hyperplane), untrained (absent from the
/// training data; decision -inf), or, when the data held a single class,
/// the sole class (decision +inf, no solver run).
class OvaModel {
 public:
  OvaModel() = default;
  OvaModel(std::size_t n_classes, std::size_t dim);

  std::size_t n_classes() const noexcept { return models_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  void set_model(int class_id, SvmModel m);
  void set_sole_class(int class_id);

  bool is_trained(int class_id) const;
  std::optional<int> sole_class() const noexcept { return sole_class_; }
  const std::optional<SvmModel>& model(int class_id) const { return models_.at(static_cast<std::size_t>(class_id)); }
  std::vector<int> trained_classes() const;

  /// Per-class decision values (-inf untrained, +inf sole class).
  std::vector<double> decisions(std::span<const double> x) const;

  bool operator==(const OvaModel&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::optional<SvmModel>> models_;
  std::optional<int> sole_class_;
};

/// One binary problem per class present among the selected rows (that class
/// +1, the rest -1). Class c is solved with seed derived from (cfg.seed, c),
/// so results do not depend on `workers`. X must carry labels.
OvaModel train_ova(const FeatureMatrix& X, std::span<const std::size_t> rows, const SvmConfig& cfg,
                   std::size_t workers = 1);
OvaModel train_ova(const FeatureMatrix& X, const SvmConfig& cfg, std::size_t workers = 1);

struct Prediction {
  int label = -1;
  std::vector<double> decisions;
};

/// Argmax over decision values; ties go to the lowest class id.
/// Throws NoTrainedClasses when every value is -inf.
int argmax_decision(std::span<const double> decisions);

/// Throws DimMismatch, NoTrainedClasses.
Prediction predict_ova(const OvaModel& m, std::span<const double> x);

// Text model format:
//   #locallearn-ova v1 dim=<D> classes=<K>
//   <class_id> <b> <w1> ... <wD>      one line per trained class
//   <class_id> +inf                   the sole class of single-class data
void write_ova(std::ostream& out, const OvaModel& m);
OvaModel read_ova(std::istream& in);
void save_ova(const std::filesystem::path& path, const OvaModel& m);
OvaModel load_ova(const std::filesystem::path& path);

}  // namespace locallearn::svm
