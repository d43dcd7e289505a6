#include "locallearn/feature_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "locallearn/errors.hpp"
#include "locallearn/random.hpp"

namespace locallearn {

LabelMap::LabelMap(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) fail(ErrorKind::InvalidArgument, "empty class name in label map");
    if (!index_.emplace(names_[i], static_cast<int>(i)).second)
      fail(ErrorKind::InvalidArgument, "duplicate class name '" + names_[i] + "' in label map");
  }
}

const std::string& LabelMap::name(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= names_.size())
    fail(ErrorKind::InvalidArgument, "class id " + std::to_string(id) + " outside label map");
  return names_[static_cast<std::size_t>(id)];
}

int LabelMap::id_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::UnknownClassName, "class '" + name + "' not in label map");
  return it->second;
}

FeatureMatrix::FeatureMatrix(std::size_t dim, std::vector<std::string> sample_ids,
                             std::vector<double> values)
    : dim_(dim), ids_(std::move(sample_ids)), values_(std::move(values)) {
  validate();
}

FeatureMatrix::FeatureMatrix(std::size_t dim, std::vector<std::string> sample_ids,
                             std::vector<double> values, std::vector<int> labels,
                             std::size_t n_classes)
    : dim_(dim),
      ids_(std::move(sample_ids)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      has_labels_(true) {
  validate();
}

void FeatureMatrix::validate() const {
  if (values_.size() != ids_.size() * dim_)
    fail(ErrorKind::DimMismatch, "value count " + std::to_string(values_.size()) + " != " +
                                     std::to_string(ids_.size()) + " rows x " +
                                     std::to_string(dim_) + " dims");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      Error e(ErrorKind::NonFiniteValue, "non-finite value at row " +
                                             std::to_string(i / dim_ + 1) + ", column " +
                                             std::to_string(i % dim_ + 1));
      e.row = i / dim_ + 1;
      e.column = i % dim_ + 1;
      throw e;
    }
  }
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (!seen.emplace(id, 0).second) fail(ErrorKind::InvalidArgument, "duplicate sample id '" + id + "'");
  }
  if (has_labels_) {
    if (labels_.size() != ids_.size())
      fail(ErrorKind::MissingLabels, "label count does not match row count");
    for (int l : labels_) {
      if (l < 0 || static_cast<std::size_t>(l) >= n_classes_)
        fail(ErrorKind::InvalidArgument, "label " + std::to_string(l) + " outside [0, " +
                                             std::to_string(n_classes_) + ")");
    }
  }
}

FeatureMatrix FeatureMatrix::with_labels(std::vector<int> labels, std::size_t n_classes) const {
  return FeatureMatrix(dim_, ids_, values_, std::move(labels), n_classes);
}

FeatureMatrix FeatureMatrix::without_labels() const { return FeatureMatrix(dim_, ids_, values_); }

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;
  ids.reserve(rows.size());
  values.reserve(rows.size() * dim_);
  for (std::size_t r : rows) {
    if (r >= n_samples()) fail(ErrorKind::InvalidArgument, "row index out of range");
    ids.push_back(ids_[r]);
    auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
    if (has_labels_) labels.push_back(labels_[r]);
  }
  if (has_labels_) return FeatureMatrix(dim_, std::move(ids), std::move(values), std::move(labels), n_classes_);
  return FeatureMatrix(dim_, std::move(ids), std::move(values));
}

std::unordered_map<std::string, std::size_t> FeatureMatrix::id_index() const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) index.emplace(ids_[i], i);
  return index;
}

namespace {

std::vector<std::size_t> sorted_order(const FeatureMatrix& m) {
  std::vector<std::size_t> order(m.n_samples());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return m.sample_id(x) < m.sample_id(y); });
  return order;
}

}  // namespace

std::pair<FeatureMatrix, FeatureMatrix> align_by_id(const FeatureMatrix& a, const FeatureMatrix& b) {
  const auto order_a = sorted_order(a);
  const auto order_b = sorted_order(b);

  std::vector<std::string> diff;
  std::size_t i = 0, j = 0;
  while (i < order_a.size() || j < order_b.size()) {
    if (j == order_b.size() ||
        (i < order_a.size() && a.sample_id(order_a[i]) < b.sample_id(order_b[j]))) {
      diff.push_back(a.sample_id(order_a[i++]));
    } else if (i == order_a.size() || b.sample_id(order_b[j]) < a.sample_id(order_a[i])) {
      diff.push_back(b.sample_id(order_b[j++]));
    } else {
      ++i;
      ++j;
    }
  }
  if (!diff.empty()) {
    std::string msg = "sample id sets differ (" + std::to_string(diff.size()) + " ids):";
    for (std::size_t k = 0; k < diff.size() && k < 10; ++k) msg += " " + diff[k];
    if (diff.size() > 10) msg += " ...";
    Error e(ErrorKind::IdMismatch, msg);
    e.ids = std::move(diff);
    throw e;
  }
  return {a.select(order_a), b.select(order_b)};
}

FeatureMatrix balanced_downsample(const FeatureMatrix& m, std::size_t cap, std::uint64_t seed) {
  if (!m.has_labels()) fail(ErrorKind::MissingLabels, "balanced_downsample requires labels");
  if (cap == 0) fail(ErrorKind::InvalidArgument, "class cap must be >= 1");

  std::vector<std::vector<std::size_t>> by_class(m.n_classes());
  for (std::size_t i = 0; i < m.n_samples(); ++i)
    by_class[static_cast<std::size_t>(m.label(i))].push_back(i);

  std::vector<char> keep(m.n_samples(), 0);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.size() <= cap) {
      for (std::size_t r : rows) keep[r] = 1;
      continue;
    }
    // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
    Rng rng = Rng::derive(seed, c);
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(rows.size() - i));
      std::swap(rows[i], rows[j]);
      keep[rows[i]] = 1;
    }
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < m.n_samples(); ++i)
    if (keep[i]) kept.push_back(i);
  return m.select(kept);
}

FeatureMatrix attach_labels(const FeatureMatrix& m,
                            const std::vector<std::pair<std::string, std::string>>& labels,
                            const LabelMap& label_map) {
  std::unordered_map<std::string, int> by_id;
  by_id.reserve(labels.size());
  for (const auto& [id, name] : labels) by_id[id] = label_map.id_of(name);

  std::vector<int> out;
  out.reserve(m.n_samples());
  for (const auto& id : m.sample_ids()) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::MissingLabels, "no label for sample '" + id + "'");
    out.push_back(it->second);
  }
  return m.with_labels(std::move(out), label_map.n_classes());
}

LabelMap infer_label_map(const std::vector<std::pair<std::string, std::string>>& labels) {
  std::set<std::string> names;
  for (const auto& entry : labels) names.insert(entry.second);
  return LabelMap(std::vector<std::string>(names.begin(), names.end()));
}

}  // namespace locallearn
