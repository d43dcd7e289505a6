#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "locallearn/feature_matrix.hpp"

namespace locallearn::features {

/// Unit Euclidean norm; the zero vector is returned unchanged.
/// Throws NonFiniteValue.
std::vector<double> l2_normalize(std::span<const double> v);

struct FusionSource {
  std::string name;
  bool normalize = true;
};

struct FusionSpec {
  std::vector<FusionSource> sources;
  /// Renormalize the concatenated row as a whole. Off by default: each
  /// source block is normalized on its own.
  bool post_normalize = false;
};

/// Concatenates the (optionally L2-normalized) rows of every source in spec
/// order. Output rows follow the first source's row order; the others are
/// looked up by sample id. Labels are taken from the first labeled source.
/// Throws UnknownSource, IdMismatch.
FeatureMatrix fuse(const FusionSpec& spec, const std::map<std::string, FeatureMatrix>& sources);

}  // namespace locallearn::features
