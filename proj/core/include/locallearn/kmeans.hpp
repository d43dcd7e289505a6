#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace locallearn::bovw {

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;          // k x dim, row-major
  std::vector<std::uint32_t> assignment;  // nearest centroid per point
  /// Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm with k-means++ seeding under Euclidean distance.
///
/// Empty clusters are repaired by moving the farthest point of the cluster
/// with the largest within-cluster sum of squares into them. When k exceeds
/// the number of distinct points, the surplus centroids duplicate points in
/// order of decreasing distance from the data mean. Assignment ties go to
/// the lower centroid index. Deterministic given seed for any `workers`.
KMeansResult kmeans(std::span<const float> data, std::size_t dim, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100, std::size_t workers = 1);

}  // namespace locallearn::bovw
