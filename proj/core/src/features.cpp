#include "locallearn/features.hpp"

#include <cmath>
#include <set>

#include "locallearn/errors.hpp"

namespace locallearn::features {

std::vector<double> l2_normalize(std::span<const double> v) {
  double sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      Error e(ErrorKind::NonFiniteValue, "non-finite entry at column " + std::to_string(i + 1));
      e.column = i + 1;
      throw e;
    }
    sq += v[i] * v[i];
  }
  std::vector<double> out(v.begin(), v.end());
  if (sq == 0.0) return out;
  const double norm = std::sqrt(sq);
  for (double& x : out) x /= norm;
  return out;
}

FeatureMatrix fuse(const FusionSpec& spec, const std::map<std::string, FeatureMatrix>& sources) {
  if (spec.sources.empty()) fail(ErrorKind::InvalidArgument, "fusion needs at least one source");
  std::set<std::string> names;
  std::vector<const FeatureMatrix*> mats;
  for (const auto& s : spec.sources) {
    if (!names.insert(s.name).second) fail(ErrorKind::InvalidArgument, "source '" + s.name + "' listed twice");
    auto it = sources.find(s.name);
    if (it == sources.end()) fail(ErrorKind::UnknownSource, "no source named '" + s.name + "'");
    mats.push_back(&it->second);
  }

  const FeatureMatrix& lead = *mats.front();
  const std::size_t n = lead.n_samples();

  // Row maps from lead order into every other source.
  std::vector<std::vector<std::size_t>> row_of(mats.size());
  for (std::size_t s = 0; s < mats.size(); ++s) {
    if (s == 0) continue;
    align_by_id(lead, *mats[s]);  // IdMismatch with the symmetric difference
    const auto index = mats[s]->id_index();
    row_of[s].resize(n);
    for (std::size_t i = 0; i < n; ++i) row_of[s][i] = index.at(lead.sample_id(i));
  }

  std::size_t dim = 0;
  for (const auto* m : mats) dim += m->dim();

  std::vector<double> values;
  values.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row_start = values.size();
    for (std::size_t s = 0; s < mats.size(); ++s) {
      const std::size_t r = s == 0 ? i : row_of[s][i];
      const auto row = mats[s]->row(r);
      if (spec.sources[s].normalize) {
        const auto normed = l2_normalize(row);
        values.insert(values.end(), normed.begin(), normed.end());
      } else {
        values.insert(values.end(), row.begin(), row.end());
      }
    }
    if (spec.post_normalize) {
      const auto normed = l2_normalize(std::span<const double>(values).subspan(row_start, dim));
      std::copy(normed.begin(), normed.end(), values.begin() + static_cast<std::ptrdiff_t>(row_start));
    }
  }

  for (std::size_t s = 0; s < mats.size(); ++s) {
    const auto* m = mats[s];
    if (!m->has_labels()) continue;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = m->label(s == 0 ? i : row_of[s][i]);
    return FeatureMatrix(dim, lead.sample_ids(), std::move(values), std::move(labels), m->n_classes());
  }
  return FeatureMatrix(dim, lead.sample_ids(), std::move(values));
}

}  // namespace locallearn::features
