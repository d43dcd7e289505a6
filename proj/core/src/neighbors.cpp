#include "locallearn/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

#include "locallearn/errors.hpp"

namespace locallearn::neighbors {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.row < b.row;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::DimMismatch, "cosine similarity of vectors with different dims");
  const double na = std::sqrt(dot(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(dot(b.data(), b.data(), b.size()));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a.data(), b.data(), a.size()) / (na * nb);
}

CosineIndex::CosineIndex(const FeatureMatrix& data) : data_(&data), norms_(data.n_samples()) {
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    const auto r = data.row(i);
    norms_[i] = std::sqrt(dot(r.data(), r.data(), r.size()));
  }
}

std::vector<Neighbor> CosineIndex::top_k(std::span<const double> q, std::size_t k) const {
  if (k == 0) fail(ErrorKind::InvalidArgument, "top_k needs k >= 1");
  const std::size_t dim = data_->dim();
  if (q.size() != dim)
    fail(ErrorKind::DimMismatch, "query dim " + std::to_string(q.size()) + " != index dim " +
                                     std::to_string(dim));
  const double qn = std::sqrt(dot(q.data(), q.data(), dim));
  const std::size_t n = data_->n_samples();

  std::vector<Neighbor> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    all[i].row = i;
    if (qn == 0.0 || norms_[i] == 0.0) continue;
    all[i].similarity = dot(q.data(), data_->row(i).data(), dim) / (qn * norms_[i]);
  }
  k = std::min(k, n);
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), before);
  all.resize(k);
  return all;
}

KdForest KdForest::build(const FeatureMatrix& points, const KdForestParams& params) {
  return build(points.values(), points.dim(), params);
}

KdForest KdForest::build(std::span<const double> values, std::size_t dim, const KdForestParams& params) {
  if (dim == 0 || values.empty() || values.size() % dim != 0)
    fail(ErrorKind::InvalidArgument, "kd-forest needs at least one point of nonzero dim");
  if (params.n_trees == 0 || params.leaf_capacity == 0 || params.top_variance_dims == 0)
    fail(ErrorKind::InvalidArgument, "kd-forest trees, leaf capacity and top-variance dims must be >= 1");
  const std::size_t n = values.size() / dim;
  if (n > std::numeric_limits<std::uint32_t>::max())
    fail(ErrorKind::InvalidArgument, "kd-forest supports at most 2^32-1 points");

  KdForest f;
  f.dim_ = dim;
  f.points_.assign(values.begin(), values.end());
  f.params_ = params;
  f.trees_.resize(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng = Rng::derive(params.seed, t);
    Tree& tree = f.trees_[t];
    tree.order.resize(n);
    std::iota(tree.order.begin(), tree.order.end(), std::uint32_t{0});
    tree.nodes.reserve(2 * (n / params.leaf_capacity + 1));
    f.build_node(tree, 0, static_cast<std::uint32_t>(n), rng);
  }
  return f;
}

std::uint32_t KdForest::build_node(Tree& tree, std::uint32_t begin, std::uint32_t end, Rng& rng) {
  const auto id = static_cast<std::uint32_t>(tree.nodes.size());
  tree.nodes.push_back(Node{});
  const std::size_t count = end - begin;

  auto make_leaf = [&] {
    tree.nodes[id].begin = begin;
    tree.nodes[id].end = end;
    return id;
  };
  if (count <= params_.leaf_capacity) return make_leaf();

  // Per-dimension variance over the node's points.
  std::vector<double> mean(dim_, 0.0), var(dim_, 0.0);
  for (std::uint32_t i = begin; i < end; ++i) {
    const double* p = &points_[static_cast<std::size_t>(tree.order[i]) * dim_];
    for (std::size_t d = 0; d < dim_; ++d) mean[d] += p[d];
  }
  for (double& m : mean) m /= static_cast<double>(count);
  for (std::uint32_t i = begin; i < end; ++i) {
    const double* p = &points_[static_cast<std::size_t>(tree.order[i]) * dim_];
    for (std::size_t d = 0; d < dim_; ++d) {
      const double diff = p[d] - mean[d];
      var[d] += diff * diff;
    }
  }
  std::vector<std::size_t> dims;
  for (std::size_t d = 0; d < dim_; ++d)
    if (var[d] > 0.0) dims.push_back(d);
  if (dims.empty()) return make_leaf();  // all points identical
  const std::size_t top = std::min(params_.top_variance_dims, dims.size());
  std::partial_sort(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(top), dims.end(),
                    [&](std::size_t a, std::size_t b) { return var[a] != var[b] ? var[a] > var[b] : a < b; });
  const std::size_t split_dim = dims[static_cast<std::size_t>(rng.index(top))];

  auto coord = [&](std::uint32_t point) { return points_[static_cast<std::size_t>(point) * dim_ + split_dim]; };
  std::vector<double> vals;
  vals.reserve(count);
  for (std::uint32_t i = begin; i < end; ++i) vals.push_back(coord(tree.order[i]));
  auto mid = vals.begin() + static_cast<std::ptrdiff_t>(count / 2);
  std::nth_element(vals.begin(), mid, vals.end());
  double split = *mid;
  const double lowest = *std::min_element(vals.begin(), mid + 1);
  if (lowest == split) {
    // Median equals the minimum: split just above it so both sides are non-empty.
    double next = std::numeric_limits<double>::infinity();
    for (double v : vals)
      if (v > split) next = std::min(next, v);
    split = next;
  }

  const auto pivot = std::stable_partition(tree.order.begin() + begin, tree.order.begin() + end,
                                           [&](std::uint32_t p) { return coord(p) < split; });
  const auto mid_index = static_cast<std::uint32_t>(pivot - tree.order.begin());

  tree.nodes[id].split_dim = static_cast<int>(split_dim);
  tree.nodes[id].split = split;
  const std::uint32_t left = build_node(tree, begin, mid_index, rng);
  const std::uint32_t right = build_node(tree, mid_index, end, rng);
  tree.nodes[id].left = left;
  tree.nodes[id].right = right;
  return id;
}

std::size_t KdForest::node_count() const {
  std::size_t total = 0;
  for (const auto& t : trees_) total += t.nodes.size();
  return total;
}

std::size_t KdForest::subtree_depth(const Tree& tree, std::uint32_t node) const {
  const Node& n = tree.nodes[node];
  if (n.split_dim < 0) return 1;
  return 1 + std::max(subtree_depth(tree, n.left), subtree_depth(tree, n.right));
}

std::size_t KdForest::depth(std::size_t tree) const { return subtree_depth(trees_.at(tree), 0); }

std::vector<std::size_t> KdForest::leaf_points(std::size_t tree) const {
  const Tree& t = trees_.at(tree);
  std::vector<std::size_t> out;
  for (const Node& n : t.nodes)
    if (n.split_dim < 0)
      for (std::uint32_t i = n.begin; i < n.end; ++i) out.push_back(t.order[i]);
  return out;
}

NearestPoint KdForest::nearest(std::span<const double> q, std::size_t budget) const {
  if (q.size() != dim_)
    fail(ErrorKind::DimMismatch, "query dim " + std::to_string(q.size()) + " != forest dim " +
                                     std::to_string(dim_));
  if (trees_.empty()) fail(ErrorKind::InvalidArgument, "query on an empty kd-forest");

  using Entry = std::tuple<double, std::uint32_t, std::uint32_t>;  // bound, tree, node
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (std::uint32_t t = 0; t < trees_.size(); ++t) queue.emplace(0.0, t, 0u);

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_id = 0;
  std::size_t visits = 0;
  bool first = true;
  while (!queue.empty() && (first || visits < budget)) {
    auto [bound, t, node] = queue.top();
    queue.pop();
    if (bound > best) break;
    first = false;
    const Tree& tree = trees_[t];
    // Descend to a leaf, queueing the far side of every split.
    while (tree.nodes[node].split_dim >= 0) {
      const Node& n = tree.nodes[node];
      ++visits;
      const double diff = q[static_cast<std::size_t>(n.split_dim)] - n.split;
      const std::uint32_t near = diff < 0.0 ? n.left : n.right;
      const std::uint32_t far = diff < 0.0 ? n.right : n.left;
      const double far_bound = std::max(bound, diff * diff);
      if (far_bound <= best) queue.emplace(far_bound, t, far);
      node = near;
    }
    ++visits;
    const Node& leaf = tree.nodes[node];
    for (std::uint32_t i = leaf.begin; i < leaf.end; ++i) {
      const std::size_t p = tree.order[i];
      const double d2 = squared_distance(q.data(), &points_[p * dim_], dim_);
      if (d2 < best || (d2 == best && p < best_id)) {
        best = d2;
        best_id = p;
      }
    }
  }
  return {best_id, std::sqrt(best)};
}

}  // namespace locallearn::neighbors
