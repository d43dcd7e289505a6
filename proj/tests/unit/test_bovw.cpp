#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "locallearn/bovw.hpp"
#include "locallearn/kmeans.hpp"
#include "locallearn/random.hpp"
#include "locallearn/synthetic.hpp"
#include "support.hpp"

using namespace locallearn;
using namespace locallearn::bovw;
using testsupport::error_kind;

namespace {

GrayImage step_edge(std::size_t w, std::size_t h) {
  GrayImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = w / 2; x < w; ++x) img.at(x, y) = 200;
  return img;
}

GrayImage noise_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>(rng.index(256));
  return img;
}

std::vector<double> constant_centroids(std::size_t k, std::initializer_list<double> levels) {
  std::vector<double> c;
  for (double v : levels) c.insert(c.end(), kDescriptorDim, v);
  CHECK(c.size() == k * kDescriptorDim);
  return c;
}

Descriptor filled_descriptor(float v, double x, double y) {
  Descriptor d;
  d.values.fill(v);
  d.x = x;
  d.y = y;
  return d;
}

// Oracle: exhaustive nearest centroid with ties to the lower word.
std::size_t brute_word(const std::vector<double>& centroids, std::span<const float> d) {
  std::size_t best = 0;
  double bd = INFINITY;
  for (std::size_t w = 0; w * kDescriptorDim < centroids.size(); ++w) {
    double s = 0;
    for (std::size_t j = 0; j < kDescriptorDim; ++j) {
      const double diff = centroids[w * kDescriptorDim + j] - d[j];
      s += diff * diff;
    }
    if (s < bd) {
      bd = s;
      best = w;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("dense sift on flat and edge images") {
  DenseSiftConfig cfg;
  const auto flat = dense_sift(GrayImage(48, 48, 128), cfg);
  REQUIRE_FALSE(flat.empty());
  for (const auto& d : flat)
    for (float v : d.values) CHECK(v == 0.0f);

  const auto edge = dense_sift(step_edge(32, 32), {.bin_sizes = {4}});
  double horizontal = 0, total = 0;
  for (const auto& d : edge)
    for (std::size_t cell = 0; cell < kSpatialBins * kSpatialBins; ++cell)
      for (std::size_t o = 0; o < kOrientationBins; ++o) {
        const double v = d.values[cell * kOrientationBins + o];
        total += v;
        if (o == 0 || o == 4) horizontal += v;
      }
  REQUIRE(total > 0);
  CHECK(horizontal / total > 0.8);

  for (const auto& d : dense_sift(noise_image(48, 48, 1), cfg)) {
    double n2 = 0;
    for (float v : d.values) {
      CHECK(v >= 0.0f);
      n2 += double(v) * v;
    }
    CHECK((n2 == 0.0 || std::abs(std::sqrt(n2) - 1.0) < 1e-4));
  }
}

TEST_CASE("dense sift grid and errors") {
  const auto d = dense_sift(GrayImage(16, 16, 10), {.bin_sizes = {4}, .step = 2});
  // 4x4 bins of 4 px span 16 px: exactly one frame fits
  CHECK(d.size() == 1);
  CHECK(error_kind([] { dense_sift(GrayImage(15, 40), {}); }) == ErrorKind::ImageTooSmall);
  CHECK(error_kind([] { dense_sift(GrayImage(20, 20), {.bin_sizes = {10}}); }) == ErrorKind::ImageTooSmall);
  CHECK(error_kind([] { dense_sift(GrayImage(32, 32), {.step = 0}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("kmeans on two tight blobs recovers the blob means") {
  std::vector<float> pts;
  Rng rng(3);
  double mean_a[2] = {0, 0}, mean_b[2] = {0, 0};
  for (int i = 0; i < 50; ++i) {
    const float ax = float(rng.normal(-5, 0.01)), ay = float(rng.normal(0, 0.01));
    const float bx = float(rng.normal(5, 0.01)), by = float(rng.normal(1, 0.01));
    pts.insert(pts.end(), {ax, ay, bx, by});
    mean_a[0] += ax / 50.0;
    mean_a[1] += ay / 50.0;
    mean_b[0] += bx / 50.0;
    mean_b[1] += by / 50.0;
  }
  const auto r = kmeans(pts, 2, 2, 7);
  CHECK(r.converged);
  const bool a_first = r.centroids[0] < 0;
  const double* ca = &r.centroids[a_first ? 0 : 2];
  const double* cb = &r.centroids[a_first ? 2 : 0];
  CHECK(std::abs(ca[0] - mean_a[0]) < 1e-6);
  CHECK(std::abs(ca[1] - mean_a[1]) < 1e-6);
  CHECK(std::abs(cb[0] - mean_b[0]) < 1e-6);
  CHECK(std::abs(cb[1] - mean_b[1]) < 1e-6);
}

TEST_CASE("kmeans invariants") {
  std::vector<float> pts;
  Rng rng(4);
  for (int i = 0; i < 600; ++i) pts.push_back(float(rng.normal()));
  const auto r = kmeans(pts, 3, 12, 1);
  for (std::size_t i = 1; i < r.wcss_history.size(); ++i) CHECK(r.wcss_history[i] <= r.wcss_history[i - 1] + 1e-9);
  CHECK(r.assignment.size() == 200);
  for (std::size_t c = 0; c < 12; ++c) CHECK(std::count(r.assignment.begin(), r.assignment.end(), c) > 0);

  const auto again = kmeans(pts, 3, 12, 1, 100, 3);
  CHECK(again.centroids == r.centroids);

  // k equal to n puts every point in its own cluster
  const std::vector<float> five{0, 1, 2, 3, 10};
  const auto e = kmeans(five, 1, 5, 0);
  auto c = e.centroids;
  std::sort(c.begin(), c.end());
  CHECK(c == std::vector<double>{0, 1, 2, 3, 10});
  CHECK(e.wcss_history.back() == 0.0);

  // more clusters than distinct points still yields k centroids
  const std::vector<float> dup{1, 1, 1, 2};
  CHECK(kmeans(dup, 1, 3, 0).centroids.size() == 3);
}

TEST_CASE("pyramid cell boundaries") {
  CHECK(pyramid_cell(0, 0, 48, 48, 1) == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(pyramid_cell(47, 47, 48, 48, 1) == std::pair<std::size_t, std::size_t>{0, 0});
  // the internal boundary of a 2x2 grid sits at 23.5
  CHECK(pyramid_cell(23, 0, 48, 48, 2).second == 0);
  CHECK(pyramid_cell(23.5, 0, 48, 48, 2).second == 0);
  CHECK(pyramid_cell(24, 0, 48, 48, 2).second == 1);
  CHECK(pyramid_cell(0, 24, 48, 48, 2).first == 1);
  CHECK(pyramid_cell(47, 47, 48, 48, 3) == std::pair<std::size_t, std::size_t>{2, 2});
  CHECK(pyramid_cell(15, 16, 48, 48, 3) == std::pair<std::size_t, std::size_t>{1, 0});
  CHECK(pyramid_cell(-3, 100, 48, 48, 4) == std::pair<std::size_t, std::size_t>{3, 0});
}

TEST_CASE("encode toy layout") {
  const PyramidConfig pyr{{1, 2}, {2, 2}};
  CHECK(pyr.encoded_dim() == 10);
  const Vocabulary vocab({constant_centroids(2, {0.1, 0.9}), constant_centroids(2, {0.1, 0.9})}, {});
  const std::vector<Descriptor> ds{filled_descriptor(0.1f, 5, 5)};
  const auto v = encode(ds, vocab, pyr, 48, 48);
  std::vector<double> expected(10, 0.0);
  expected[0] = 1.0;  // level 0, cell 0, word 0
  expected[2] = 1.0;  // level 1, cell (0,0), word 0
  CHECK(v == expected);

  const std::vector<Descriptor> other{filled_descriptor(0.85f, 40, 40)};
  const auto w = encode(other, vocab, pyr, 48, 48);
  CHECK(w[1] == 1.0);
  CHECK(w[2 + 3 * 2 + 1] == 1.0);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == 2.0);

  CHECK(encode(std::vector<Descriptor>{}, vocab, pyr, 48, 48) == std::vector<double>(10, 0.0));

  const PyramidConfig three{{1, 2, 3}, {2, 2, 2}};
  CHECK(error_kind([&] { encode(ds, vocab, three, 48, 48); }) == ErrorKind::LevelMismatch);
  const PyramidConfig sizes{{1, 2}, {2, 3}};
  CHECK(error_kind([&] { encode(ds, vocab, sizes, 48, 48); }) == ErrorKind::LevelMismatch);
}

TEST_CASE("encoded dimensions") {
  CHECK(PyramidConfig{}.encoded_dim() == 300000);
  CHECK(PyramidConfig::desk().encoded_dim() == 1600);
}

TEST_CASE("encode at exhaustive budget matches brute-force quantization") {
  Rng rng(5);
  std::vector<std::vector<double>> levels;
  for (std::size_t k : {7u, 5u}) {
    std::vector<double> c(k * kDescriptorDim);
    for (double& x : c) x = rng.uniform();
    levels.push_back(std::move(c));
  }
  const Vocabulary vocab(levels, {.leaf_capacity = 2});
  const PyramidConfig pyr{{1, 2}, {7, 5}};
  std::vector<Descriptor> ds;
  for (int i = 0; i < 30; ++i) {
    Descriptor d;
    for (float& x : d.values) x = float(rng.uniform());
    d.x = rng.uniform(0, 31);
    d.y = rng.uniform(0, 31);
    ds.push_back(d);
  }
  const auto v = encode(ds, vocab, pyr, 32, 32, std::size_t{1} << 20);
  std::vector<double> expected(pyr.encoded_dim(), 0.0);
  for (const auto& d : ds) {
    expected[brute_word(levels[0], d.values)] = 1.0;
    const auto [r, c] = pyramid_cell(d.x, d.y, 32, 32, 2);
    expected[7 + (r * 2 + c) * 5 + brute_word(levels[1], d.values)] = 1.0;
  }
  CHECK(v == expected);
}

TEST_CASE("vocabulary construction, flip invariance and file round trip") {
  const auto imgs = synthetic::stripes_and_checkerboards(4, 48, 1);
  std::vector<GrayImage> images;
  for (const auto& [id, img] : imgs) images.push_back(img);

  BovwConfig cfg = BovwConfig::desk();
  cfg.pyramid = {{1, 2}, {4, 4}};
  cfg.vocab.max_descriptors = 100;
  cfg.vocab.kmeans_iters = 20;
  VocabStats stats;
  const auto vocab = build_vocab(std::span(images).first(1), cfg, 1, &stats);
  CHECK(vocab.sizes() == std::vector<std::size_t>{4, 4});
  CHECK(stats.descriptors_used == 100);
  CHECK(stats.descriptors_total > 100);

  const auto again = build_vocab(std::span(images).first(1), cfg, 2);
  CHECK(again.level(0).centroids == vocab.level(0).centroids);

  // A left-right symmetric image has the same whole-image histogram as its mirror.
  GrayImage sym(48, 48);
  for (std::size_t y = 0; y < 48; ++y)
    for (std::size_t x = 0; x < 24; ++x) sym.at(x, y) = sym.at(47 - x, y) = std::uint8_t((x * 13 + y * 7) % 256);
  const auto a = encode(dense_sift(sym, cfg.sift), vocab, cfg.pyramid, 48, 48);
  const auto b = encode(dense_sift(flip_horizontal(sym), cfg.sift), vocab, cfg.pyramid, 48, 48);
  CHECK(std::equal(a.begin(), a.begin() + 4, b.begin()));

  std::stringstream buf;
  write_vocabulary(buf, vocab);
  const auto back = read_vocabulary(buf, {});
  REQUIRE(back.levels() == 2);
  CHECK(back.level(0).centroids == vocab.level(0).centroids);
  CHECK(back.level(1).centroids == vocab.level(1).centroids);

  std::stringstream bad("LLVX");
  CHECK(error_kind([&] { read_vocabulary(bad, {}); }) == ErrorKind::MalformedFile);
}

TEST_CASE("pgm round trip and flips") {
  const auto img = noise_image(7, 5, 2);
  std::stringstream buf;
  write_pgm(buf, img);
  CHECK(read_pgm(buf) == img);
  CHECK(flip_horizontal(flip_horizontal(img)) == img);
  CHECK(flip_horizontal(img).at(0, 0) == img.at(6, 0));
  std::stringstream comment("P5\n# note\n2 1\n255\nAB");
  const auto c = read_pgm(comment);
  CHECK(c.width() == 2);
  CHECK(c.at(1, 0) == 'B');
  std::stringstream truncated("P5\n4 4\n255\nAB");
  CHECK(error_kind([&] { read_pgm(truncated); }) == ErrorKind::MalformedFile);
  std::stringstream ascii("P2\n1 1\n255\n3\n");
  CHECK(error_kind([&] { read_pgm(ascii); }) == ErrorKind::MalformedFile);
}
