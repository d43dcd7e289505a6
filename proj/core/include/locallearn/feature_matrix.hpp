#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace locallearn {

/// Ordered class names; the position of a name is its integer class id.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  std::size_t n_classes() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(int id) const;
  /// Throws UnknownClassName.
  int id_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  bool operator==(const LabelMap& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

/// Dense row-major matrix of feature vectors keyed by sample id, with
/// optional integer labels. Immutable once constructed; every constructor
/// enforces finite values, unique ids and labels in [0, n_classes).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t dim, std::vector<std::string> sample_ids, std::vector<double> values);
  FeatureMatrix(std::size_t dim, std::vector<std::string> sample_ids, std::vector<double> values,
                std::vector<int> labels, std::size_t n_classes);

  std::size_t n_samples() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }

  const std::vector<std::string>& sample_ids() const noexcept { return ids_; }
  const std::string& sample_id(std::size_t i) const { return ids_[i]; }

  bool has_labels() const noexcept { return has_labels_; }
  std::span<const int> labels() const noexcept { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  FeatureMatrix with_labels(std::vector<int> labels, std::size_t n_classes) const;
  FeatureMatrix without_labels() const;
  /// Rows in the given order (labels carried along).
  FeatureMatrix select(std::span<const std::size_t> rows) const;

  std::unordered_map<std::string, std::size_t> id_index() const;

  bool operator==(const FeatureMatrix& other) const = default;

 private:
  void validate() const;

  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::size_t n_classes_ = 0;
  bool has_labels_ = false;
};

/// Reorders both matrices by the sorted shared sample id sequence.
/// Throws IdMismatch (with the symmetric difference) when the id sets differ.
std::pair<FeatureMatrix, FeatureMatrix> align_by_id(const FeatureMatrix& a, const FeatureMatrix& b);

inline constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();

/// Keeps min(cap, count) rows per class, chosen uniformly without
/// replacement from a stream seeded by `seed`; surviving rows keep their
/// original relative order. Throws MissingLabels.
FeatureMatrix balanced_downsample(const FeatureMatrix& m, std::size_t cap, std::uint64_t seed);

/// Attaches labels from (sample_id, class name) pairs. Throws MissingLabels
/// if a row has no entry and UnknownClassName for names outside the map.
FeatureMatrix attach_labels(const FeatureMatrix& m,
                            const std::vector<std::pair<std::string, std::string>>& labels,
                            const LabelMap& label_map);

/// Sorted unique class names of a label list.
LabelMap infer_label_map(const std::vector<std::pair<std::string, std::string>>& labels);

}  // namespace locallearn
