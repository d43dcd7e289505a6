#include "locallearn/bovw.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "locallearn/errors.hpp"
#include "locallearn/io.hpp"
#include "locallearn/kmeans.hpp"
#include "locallearn/kv_config.hpp"
#include "locallearn/parallel.hpp"
#include "locallearn/random.hpp"

namespace locallearn::bovw {

std::size_t PyramidConfig::encoded_dim() const {
  validate();
  std::size_t dim = 0;
  for (std::size_t i = 0; i < grids.size(); ++i) dim += grids[i] * grids[i] * vocab_sizes[i];
  return dim;
}

void PyramidConfig::validate() const {
  if (grids.empty()) fail(ErrorKind::InvalidArgument, "pyramid needs at least one level");
  if (grids.size() != vocab_sizes.size())
    fail(ErrorKind::LevelMismatch, "pyramid has " + std::to_string(grids.size()) + " grids but " +
                                       std::to_string(vocab_sizes.size()) + " vocabulary sizes");
  for (std::size_t i = 0; i < grids.size(); ++i)
    if (grids[i] == 0 || vocab_sizes[i] == 0)
      fail(ErrorKind::InvalidArgument, "pyramid grid and vocabulary sizes must be >= 1");
}

BovwConfig BovwConfig::desk() {
  BovwConfig cfg;
  cfg.pyramid = PyramidConfig::desk();
  return cfg;
}

BovwConfig BovwConfig::load(const std::filesystem::path& path, const BovwConfig& defaults) {
  const KvConfig kv = KvConfig::load(path);
  kv.reject_unknown({"bin_sizes", "step", "contrast_threshold", "magnification", "window_size", "grids", "vocab",
                     "max_descriptors", "kmeans_iters", "trees", "leaf_capacity", "top_dims", "budget", "seed"});
  BovwConfig cfg = defaults;
  cfg.sift.bin_sizes = kv.get_counts("bin_sizes", cfg.sift.bin_sizes);
  cfg.sift.step = kv.get_count("step", cfg.sift.step);
  cfg.sift.contrast_threshold = kv.get_real("contrast_threshold", cfg.sift.contrast_threshold);
  cfg.sift.magnification = kv.get_real("magnification", cfg.sift.magnification);
  cfg.sift.window_size = kv.get_real("window_size", cfg.sift.window_size);
  cfg.pyramid.grids = kv.get_counts("grids", cfg.pyramid.grids);
  cfg.pyramid.vocab_sizes = kv.get_counts("vocab", cfg.pyramid.vocab_sizes);
  cfg.vocab.max_descriptors = kv.get_count("max_descriptors", cfg.vocab.max_descriptors);
  cfg.vocab.kmeans_iters = kv.get_count("kmeans_iters", cfg.vocab.kmeans_iters);
  cfg.vocab.forest.n_trees = kv.get_count("trees", cfg.vocab.forest.n_trees);
  cfg.vocab.forest.leaf_capacity = kv.get_count("leaf_capacity", cfg.vocab.forest.leaf_capacity);
  cfg.vocab.forest.top_variance_dims = kv.get_count("top_dims", cfg.vocab.forest.top_variance_dims);
  cfg.vocab.forest.backtrack_budget = kv.get_count("budget", cfg.vocab.forest.backtrack_budget);
  cfg.vocab.seed = kv.get_u64("seed", cfg.vocab.seed);
  cfg.sift.validate();
  cfg.pyramid.validate();
  return cfg;
}

Vocabulary::Vocabulary(std::vector<std::vector<double>> level_centroids, const neighbors::KdForestParams& forest) {
  for (auto& c : level_centroids) {
    if (c.empty() || c.size() % kDescriptorDim != 0)
      fail(ErrorKind::InvalidArgument, "vocabulary level must hold k x 128 centroid values");
    for (double v : c)
      if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "non-finite vocabulary centroid");
    VocabularyLevel level;
    level.k = c.size() / kDescriptorDim;
    level.forest = neighbors::KdForest::build(c, kDescriptorDim, forest);
    level.centroids = std::move(c);
    levels_.push_back(std::move(level));
  }
}

std::vector<std::size_t> Vocabulary::sizes() const {
  std::vector<std::size_t> out;
  for (const auto& l : levels_) out.push_back(l.k);
  return out;
}

std::size_t Vocabulary::quantize(std::size_t level, std::span<const float> descriptor, std::size_t budget) const {
  std::array<double, kDescriptorDim> q;
  if (descriptor.size() != kDescriptorDim) fail(ErrorKind::DimMismatch, "descriptor must have 128 entries");
  std::copy(descriptor.begin(), descriptor.end(), q.begin());
  return levels_.at(level).forest.nearest(q, budget).id;
}

Vocabulary build_vocab(std::span<const GrayImage> images, const BovwConfig& cfg, std::size_t workers,
                       VocabStats* stats) {
  if (images.empty()) fail(ErrorKind::InvalidArgument, "build_vocab needs at least one training image");
  cfg.pyramid.validate();
  if (cfg.vocab.max_descriptors == 0) fail(ErrorKind::InvalidArgument, "max_descriptors must be >= 1");

  std::vector<std::vector<Descriptor>> per_image(images.size());
  parallel_for(images.size(), workers, [&](std::size_t i) { per_image[i] = dense_sift(images[i], cfg.sift); });

  std::vector<const Descriptor*> all;
  for (const auto& v : per_image)
    for (const auto& d : v) all.push_back(&d);
  const std::size_t total = all.size();

  std::vector<std::size_t> picked(total);
  for (std::size_t i = 0; i < total; ++i) picked[i] = i;
  if (total > cfg.vocab.max_descriptors) {
    Rng rng = Rng::derive(cfg.vocab.seed, 0x5a3b1e);
    for (std::size_t i = 0; i < cfg.vocab.max_descriptors; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(total - i));
      std::swap(picked[i], picked[j]);
    }
    picked.resize(cfg.vocab.max_descriptors);
    std::sort(picked.begin(), picked.end());
  }

  std::vector<float> data;
  data.reserve(picked.size() * kDescriptorDim);
  for (std::size_t i : picked) data.insert(data.end(), all[i]->values.begin(), all[i]->values.end());
  per_image.clear();
  if (stats) {
    stats->descriptors_total = total;
    stats->descriptors_used = picked.size();
  }

  std::vector<std::vector<double>> levels;
  for (std::size_t l = 0; l < cfg.pyramid.levels(); ++l) {
    auto result = kmeans(data, kDescriptorDim, cfg.pyramid.vocab_sizes[l], Rng::mix(cfg.vocab.seed, l),
                         cfg.vocab.kmeans_iters, workers);
    levels.push_back(std::move(result.centroids));
  }
  return Vocabulary(std::move(levels), cfg.vocab.forest);
}

std::pair<std::size_t, std::size_t> pyramid_cell(double x, double y, std::size_t width, std::size_t height,
                                                 std::size_t grid) {
  // Pixel centers sit at integers, so the image spans [-0.5, size - 0.5].
  auto index = [grid](double v, std::size_t size) {
    const double scaled = (v + 0.5) * static_cast<double>(grid) / static_cast<double>(size);
    const double c = std::ceil(scaled) - 1.0;
    return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(grid - 1)));
  };
  return {index(y, height), index(x, width)};
}

std::vector<double> encode(std::span<const Descriptor> descriptors, const Vocabulary& vocab,
                           const PyramidConfig& pyramid, std::size_t width, std::size_t height,
                           std::optional<std::size_t> budget) {
  pyramid.validate();
  if (vocab.levels() != pyramid.levels())
    fail(ErrorKind::LevelMismatch, "vocabulary has " + std::to_string(vocab.levels()) + " levels, pyramid has " +
                                       std::to_string(pyramid.levels()));
  for (std::size_t l = 0; l < pyramid.levels(); ++l)
    if (vocab.level(l).k != pyramid.vocab_sizes[l])
      fail(ErrorKind::LevelMismatch, "vocabulary level " + std::to_string(l) + " has " +
                                         std::to_string(vocab.level(l).k) + " words, pyramid expects " +
                                         std::to_string(pyramid.vocab_sizes[l]));

  std::vector<std::size_t> offset(pyramid.levels() + 1, 0);
  for (std::size_t l = 0; l < pyramid.levels(); ++l)
    offset[l + 1] = offset[l] + pyramid.grids[l] * pyramid.grids[l] * pyramid.vocab_sizes[l];

  std::vector<double> out(offset.back(), 0.0);
  for (const auto& d : descriptors) {
    for (std::size_t l = 0; l < pyramid.levels(); ++l) {
      const std::size_t b = budget.value_or(vocab.level(l).forest.params().backtrack_budget);
      const std::size_t word = vocab.quantize(l, d.values, b);
      const auto [row, col] = pyramid_cell(d.x, d.y, width, height, pyramid.grids[l]);
      out[offset[l] + (row * pyramid.grids[l] + col) * pyramid.vocab_sizes[l] + word] = 1.0;
    }
  }
  return out;
}

FeatureMatrix encode_images(const std::vector<std::pair<std::string, GrayImage>>& images, const Vocabulary& vocab,
                            const BovwConfig& cfg, std::size_t workers) {
  const std::size_t dim = cfg.pyramid.encoded_dim();
  std::vector<std::vector<double>> rows(images.size());
  parallel_for(images.size(), workers, [&](std::size_t i) {
    const auto& img = images[i].second;
    const auto desc = dense_sift(img, cfg.sift);
    rows[i] = encode(desc, vocab, cfg.pyramid, img.width(), img.height());
  });
  std::vector<std::string> ids;
  std::vector<double> values;
  values.reserve(images.size() * dim);
  for (std::size_t i = 0; i < images.size(); ++i) {
    ids.push_back(images[i].first);
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return FeatureMatrix(dim, std::move(ids), std::move(values));
}

namespace {

constexpr std::array<char, 4> kVocabMagic = {'L', 'L', 'V', 'B'};

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename UInt>
bool get_le(std::istream& in, UInt& v) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
  return true;
}

}  // namespace

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  out.write(kVocabMagic.data(), kVocabMagic.size());
  for (std::size_t l = 0; l < vocab.levels(); ++l) {
    const auto& level = vocab.level(l);
    put_u32(out, static_cast<std::uint32_t>(level.k));
    put_u32(out, static_cast<std::uint32_t>(kDescriptorDim));
    for (double v : level.centroids) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
}

Vocabulary read_vocabulary(std::istream& in, const neighbors::KdForestParams& forest) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kVocabMagic)
    fail(ErrorKind::MalformedFile, "bad vocabulary magic, expected LLVB");
  std::vector<std::vector<double>> levels;
  while (in.peek() != std::char_traits<char>::eof()) {
    std::uint32_t k = 0, dim = 0;
    if (!get_le(in, k) || !get_le(in, dim)) fail(ErrorKind::MalformedFile, "truncated vocabulary level header");
    if (dim != kDescriptorDim) fail(ErrorKind::DimMismatch, "vocabulary dim " + std::to_string(dim) + " != 128");
    if (k == 0) fail(ErrorKind::MalformedFile, "vocabulary level with zero words");
    std::vector<double> c(static_cast<std::size_t>(k) * dim);
    for (auto& v : c) {
      std::uint64_t bits = 0;
      if (!get_le(in, bits)) fail(ErrorKind::MalformedFile, "truncated vocabulary centroids");
      v = std::bit_cast<double>(bits);
    }
    levels.push_back(std::move(c));
  }
  if (levels.empty()) fail(ErrorKind::MalformedFile, "vocabulary file has no levels");
  return Vocabulary(std::move(levels), forest);
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  write_vocabulary(out, vocab);
}

Vocabulary load_vocabulary(const std::filesystem::path& path, const neighbors::KdForestParams& forest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  return read_vocabulary(in, forest);
}

}  // namespace locallearn::bovw
