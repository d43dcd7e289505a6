#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "locallearn/feature_matrix.hpp"

namespace locallearn::dsd {

/// Fully connected layer, weights row-major (out x in).
struct Layer {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

/// Stack of fully connected layers with ReLU between them and a softmax
/// output. Two sizes give linear softmax, three give one hidden layer.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<Layer> layers);

  /// He-initialized weights, zero biases. sizes = {input, hidden..., classes}.
  static MlpModel create(const std::vector<std::size_t>& sizes, std::uint64_t seed);

  std::size_t n_layers() const noexcept { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t n_classes() const { return layers_.back().out; }
  std::size_t n_parameters() const;
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  std::vector<double> logits(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  bool operator==(const MlpModel&) const = default;

 private:
  std::vector<Layer> layers_;
};

/// Same shapes as the model's layers.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const MlpModel& m);
};

/// Mean cross-entropy over `rows` of labeled X.
double loss(const MlpModel& m, const FeatureMatrix& X, std::span<const std::size_t> rows);
/// Mean cross-entropy and its gradient over `rows`.
double loss_and_gradient(const MlpModel& m, const FeatureMatrix& X, std::span<const std::size_t> rows,
                         Gradients& grad);
/// Fraction of rows predicted correctly; 0 for an empty matrix.
double accuracy(const MlpModel& m, const FeatureMatrix& X);

// Model file:
//   #locallearn-mlp v1 layers=<L>
//   layer <name> <in> <out>
//   <out lines of in weights>
//   <bias line>
void write_mlp(std::ostream& out, const MlpModel& m);
MlpModel read_mlp(std::istream& in);
void save_mlp(const std::filesystem::path& path, const MlpModel& m);
MlpModel load_mlp(const std::filesystem::path& path);

}  // namespace locallearn::dsd
