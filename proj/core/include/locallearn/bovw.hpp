#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locallearn/dense_sift.hpp"
#include "locallearn/feature_matrix.hpp"
#include "locallearn/image.hpp"
#include "locallearn/neighbors.hpp"

namespace locallearn::bovw {

/// Spatial pyramid layout: level i splits the image into grids[i] x grids[i]
/// cells and quantizes against a vocabulary of vocab_sizes[i] words.
struct PyramidConfig {
  std::vector<std::size_t> grids{1, 2, 3, 4};
  std::vector<std::size_t> vocab_sizes{17000, 14000, 11000, 8000};

  /// Small vocabularies for desk-scale corpora.
  static PyramidConfig desk() { return {{1, 2, 3, 4}, {100, 80, 60, 40}}; }

  std::size_t levels() const noexcept { return grids.size(); }
  /// Sum over levels of grid^2 * vocab size.
  std::size_t encoded_dim() const;
  void validate() const;
};

struct VocabConfig {
  /// Uniform subsample of the training descriptors fed to k-means.
  std::size_t max_descriptors = 200000;
  std::size_t kmeans_iters = 100;
  neighbors::KdForestParams forest{};
  std::uint64_t seed = 0;
};

/// All knobs of the handcrafted pipeline, loadable from a KvConfig file:
///   bin_sizes, step, contrast_threshold, grids, vocab, max_descriptors,
///   kmeans_iters, trees, leaf_capacity, top_dims, budget
struct BovwConfig {
  DenseSiftConfig sift{};
  PyramidConfig pyramid{};
  VocabConfig vocab{};

  static BovwConfig full() { return {}; }
  static BovwConfig desk();
  static BovwConfig load(const std::filesystem::path& path, const BovwConfig& defaults);
};

struct VocabularyLevel {
  std::size_t k = 0;
  std::vector<double> centroids;  // k x 128
  neighbors::KdForest forest;
};

/// Per pyramid level: k-means centroids and a kd-forest over them.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::vector<double>> level_centroids, const neighbors::KdForestParams& forest);

  std::size_t levels() const noexcept { return levels_.size(); }
  const VocabularyLevel& level(std::size_t i) const { return levels_.at(i); }
  std::vector<std::size_t> sizes() const;

  /// Nearest word at a level via the kd-forest with the given node budget.
  std::size_t quantize(std::size_t level, std::span<const float> descriptor, std::size_t budget) const;

 private:
  std::vector<VocabularyLevel> levels_;
};

struct VocabStats {
  std::size_t descriptors_total = 0;
  std::size_t descriptors_used = 0;
};

/// k-means per level over a seeded uniform subsample (capped at
/// cfg.vocab.max_descriptors) of every training image's descriptors.
Vocabulary build_vocab(std::span<const GrayImage> images, const BovwConfig& cfg, std::size_t workers = 1,
                       VocabStats* stats = nullptr);

/// Grid cell (row, col) of a point; points on an internal boundary belong
/// to the lower-index cell.
std::pair<std::size_t, std::size_t> pyramid_cell(double x, double y, std::size_t width, std::size_t height,
                                                 std::size_t grid);

/// Binary presence vector over (level, cell, word), levels in order, cells
/// row-major, words innermost. `budget` overrides the forest's node budget.
/// Throws LevelMismatch.
std::vector<double> encode(std::span<const Descriptor> descriptors, const Vocabulary& vocab,
                           const PyramidConfig& pyramid, std::size_t width, std::size_t height,
                           std::optional<std::size_t> budget = std::nullopt);

/// dense_sift + encode for a batch of images; one output row per image.
FeatureMatrix encode_images(const std::vector<std::pair<std::string, GrayImage>>& images,
                            const Vocabulary& vocab, const BovwConfig& cfg, std::size_t workers = 1);

// Vocabulary file: "LLVB" then per level u32 k | u32 dim | k*dim f64,
// little-endian, levels back to back until end of file.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in, const neighbors::KdForestParams& forest);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path, const neighbors::KdForestParams& forest);

}  // namespace locallearn::bovw
