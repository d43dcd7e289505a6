#include "locallearn/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "locallearn/errors.hpp"
#include "locallearn/parallel.hpp"
#include "locallearn/random.hpp"

namespace locallearn::bovw {

namespace {

double sq_dist(const float* p, const double* c, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double diff = static_cast<double>(p[d]) - c[d];
    s += diff * diff;
  }
  return s;
}

void copy_point(const float* p, double* c, std::size_t dim) {
  for (std::size_t d = 0; d < dim; ++d) c[d] = p[d];
}

}  // namespace

KMeansResult kmeans(std::span<const float> data, std::size_t dim, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters, std::size_t workers) {
  if (dim == 0 || data.empty() || data.size() % dim != 0)
    fail(ErrorKind::InvalidArgument, "k-means needs at least one point of nonzero dim");
  if (k == 0) fail(ErrorKind::InvalidArgument, "k-means needs k >= 1");
  if (k > std::numeric_limits<std::uint32_t>::max()) fail(ErrorKind::InvalidArgument, "k too large");
  const std::size_t n = data.size() / dim;
  auto point = [&](std::size_t i) { return data.data() + i * dim; };

  KMeansResult r;
  r.k = k;
  r.dim = dim;
  r.centroids.assign(k * dim, 0.0);
  auto centroid = [&](std::size_t j) { return r.centroids.data() + j * dim; };

  // k-means++ seeding.
  Rng rng(seed);
  std::size_t chosen = 0;
  {
    copy_point(point(static_cast<std::size_t>(rng.index(n))), centroid(0), dim);
    chosen = 1;
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(point(i), centroid(0), dim);
    while (chosen < k) {
      double total = 0.0;
      for (double v : d2) total += v;
      if (total <= 0.0) break;
      const double target = rng.uniform() * total;
      double acc = 0.0;
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
      copy_point(point(pick), centroid(chosen), dim);
      for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(point(i), centroid(chosen), dim));
      ++chosen;
    }
  }
  if (chosen < k) {
    // Fewer distinct points than k: duplicate points, farthest from the mean first.
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += point(i)[d];
    for (double& m : mean) m /= static_cast<double>(n);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = sq_dist(point(i), mean.data(), dim);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
    for (std::size_t j = chosen, c = 0; j < k; ++j, ++c) copy_point(point(order[c % n]), centroid(j), dim);
  }

  r.assignment.assign(n, 0);
  std::vector<std::uint32_t> previous;
  std::vector<double> d2(n);
  std::vector<std::size_t> counts(k);
  std::vector<double> sse(k);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    parallel_for(n, workers, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_j = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const double v = sq_dist(point(i), centroid(j), dim);
        if (v < best) {
          best = v;
          best_j = static_cast<std::uint32_t>(j);
        }
      }
      r.assignment[i] = best_j;
      d2[i] = best;
    });

    std::fill(counts.begin(), counts.end(), 0);
    std::fill(sse.begin(), sse.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.assignment[i]];
      sse[r.assignment[i]] += d2[i];
    }
    bool repaired = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      std::size_t donor = k;
      for (std::size_t c = 0; c < k; ++c)
        if (counts[c] >= 2 && sse[c] > 0.0 && (donor == k || sse[c] > sse[donor])) donor = c;
      if (donor == k) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (r.assignment[i] == donor && (far == n || d2[i] > d2[far])) far = i;
      copy_point(point(far), centroid(j), dim);
      r.assignment[far] = static_cast<std::uint32_t>(j);
      sse[donor] -= d2[far];
      d2[far] = 0.0;
      --counts[donor];
      counts[j] = 1;
      repaired = true;
    }

    double wcss = 0.0;
    for (double v : d2) wcss += v;
    r.wcss_history.push_back(wcss);
    r.iterations = iter + 1;
    if (!repaired && r.assignment == previous) {
      r.converged = true;
      break;
    }
    previous = r.assignment;

    std::vector<double> sums(k * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* s = sums.data() + r.assignment[i] * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += point(i)[d];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid(j)[d] = sums[j * dim + d] / static_cast<double>(counts[j]);
    }
  }
  return r;
}

}  // namespace locallearn::bovw
