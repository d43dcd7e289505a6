#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "locallearn/feature_matrix.hpp"
#include "locallearn/image.hpp"

namespace locallearn::synthetic {

/// Two interleaved noisy half circles, alternating labels 0/1, lifted to 3-D
/// with a constant last coordinate so cosine similarity sees the 2-D offset.
/// Ids are prefix + zero-padded index.
FeatureMatrix two_arcs(std::size_t n, std::uint64_t seed, const std::string& prefix = "s", double noise = 0.05);

/// Isotropic Gaussian clusters, one per class, centers drawn uniformly from
/// [-1, 1]^dim scaled by `separation`. Labels cycle through the classes.
FeatureMatrix gaussian_blobs(std::size_t n, std::size_t n_classes, std::size_t dim, std::uint64_t seed,
                             double separation = 1.0, double spread = 0.5, const std::string& prefix = "b",
                             std::uint64_t centers_seed = 0);

/// Class 0: stripes of random period, phase and orientation (horizontal or
/// vertical); class 1: checkerboards of random cell size and phase. Both
/// with additive pixel noise. Labels alternate.
std::vector<std::pair<std::string, bovw::GrayImage>> stripes_and_checkerboards(std::size_t n, std::size_t size,
                                                                                std::uint64_t seed,
                                                                                const std::string& prefix = "img");
inline int stripes_label(std::size_t index) { return static_cast<int>(index % 2); }

}  // namespace locallearn::synthetic
