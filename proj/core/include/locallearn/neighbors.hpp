#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "locallearn/feature_matrix.hpp"
#include "locallearn/random.hpp"

namespace locallearn::neighbors {

/// Cosine of the angle between a and b; 0 when either has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::size_t row = 0;
  double similarity = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Exact cosine top-k over an immutable matrix. The index keeps a reference
/// to `data`, which must outlive it.
class CosineIndex {
 public:
  explicit CosineIndex(const FeatureMatrix& data);

  const FeatureMatrix& data() const noexcept { return *data_; }
  std::span<const double> norms() const noexcept { return norms_; }

  /// min(k, n) rows by descending similarity, ties by ascending row id.
  /// Throws DimMismatch, InvalidArgument (k == 0).
  std::vector<Neighbor> top_k(std::span<const double> q, std::size_t k) const;

 private:
  const FeatureMatrix* data_;
  std::vector<double> norms_;
};

struct KdForestParams {
  std::size_t n_trees = 4;
  std::size_t leaf_capacity = 16;
  /// Split dimension drawn uniformly among this many highest-variance dims.
  std::size_t top_variance_dims = 5;
  /// Nodes (internal and leaf) visited per query, shared by all trees.
  std::size_t backtrack_budget = 512;
  std::uint64_t seed = 0;
};

struct NearestPoint {
  std::size_t id = 0;
  double distance = 0.0;  // Euclidean
};

/// Randomized forest of kd-trees for approximate Euclidean nearest-neighbor
/// queries. Owns a copy of the points.
class KdForest {
 public:
  KdForest() = default;
  static KdForest build(std::span<const double> values, std::size_t dim, const KdForestParams& params);
  static KdForest build(const FeatureMatrix& points, const KdForestParams& params);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : points_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_trees() const noexcept { return trees_.size(); }
  const KdForestParams& params() const noexcept { return params_; }

  std::size_t node_count() const;
  std::size_t depth(std::size_t tree) const;
  /// Point ids in leaf order; each id appears exactly once per tree.
  std::vector<std::size_t> leaf_points(std::size_t tree) const;

  /// Best-bin-first search across all trees with the configured budget.
  /// Ties in distance go to the lower point id. Throws DimMismatch.
  NearestPoint nearest(std::span<const double> q) const { return nearest(q, params_.backtrack_budget); }
  NearestPoint nearest(std::span<const double> q, std::size_t budget) const;

 private:
  struct Node {
    int split_dim = -1;  // -1 for leaves
    double split = 0.0;  // points with x[split_dim] < split go left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t begin = 0;  // leaf range into Tree::order
    std::uint32_t end = 0;
  };
  struct Tree {
    std::vector<Node> nodes;  // nodes[0] is the root
    std::vector<std::uint32_t> order;
  };

  std::uint32_t build_node(Tree& tree, std::uint32_t begin, std::uint32_t end, Rng& rng);
  std::size_t subtree_depth(const Tree& tree, std::uint32_t node) const;

  std::size_t dim_ = 0;
  std::vector<double> points_;
  std::vector<Tree> trees_;
  KdForestParams params_;
};

}  // namespace locallearn::neighbors
