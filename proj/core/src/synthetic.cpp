#include "locallearn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "locallearn/errors.hpp"
#include "locallearn/random.hpp"

namespace locallearn::synthetic {

namespace {

std::string make_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return prefix + buf;
}

}  // namespace

FeatureMatrix two_arcs(std::size_t n, std::uint64_t seed, const std::string& prefix, double noise) {
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;
  constexpr double lo = -0.3, hi = std::numbers::pi + 0.3;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    const double t = rng.uniform(lo, hi);
    double x = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double y = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
    x += rng.normal(0.0, noise) - 0.5;
    y += rng.normal(0.0, noise) - 0.25;
    ids.push_back(make_id(prefix, i));
    values.insert(values.end(), {x, y, 1.0});
    labels.push_back(c);
  }
  return FeatureMatrix(3, std::move(ids), std::move(values), std::move(labels), 2);
}

FeatureMatrix gaussian_blobs(std::size_t n, std::size_t n_classes, std::size_t dim, std::uint64_t seed,
                             double separation, double spread, const std::string& prefix, std::uint64_t centers_seed) {
  if (n_classes == 0 || dim == 0) fail(ErrorKind::InvalidArgument, "blobs need classes and dims");
  Rng centers_rng = Rng::derive(centers_seed, 0xb10b);
  std::vector<double> centers(n_classes * dim);
  for (double& c : centers) c = separation * centers_rng.uniform(-1.0, 1.0);
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % n_classes;
    for (std::size_t d = 0; d < dim; ++d) values.push_back(centers[c * dim + d] + rng.normal(0.0, spread));
    ids.push_back(make_id(prefix, i));
    labels.push_back(static_cast<int>(c));
  }
  return FeatureMatrix(dim, std::move(ids), std::move(values), std::move(labels), n_classes);
}

std::vector<std::pair<std::string, bovw::GrayImage>> stripes_and_checkerboards(std::size_t n, std::size_t size,
                                                                                std::uint64_t seed,
                                                                                const std::string& prefix) {
  Rng rng(seed);
  std::vector<std::pair<std::string, bovw::GrayImage>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool stripes = i % 2 == 0;
    const std::size_t period = 4 + static_cast<std::size_t>(rng.index(9));  // 4..12
    const std::size_t phase_x = static_cast<std::size_t>(rng.index(period));
    const std::size_t phase_y = static_cast<std::size_t>(rng.index(period));
    const bool vertical = rng.index(2) == 1;
    const double dark = 40.0 + 40.0 * rng.uniform(), light = 170.0 + 50.0 * rng.uniform();
    std::vector<std::uint8_t> px(size * size);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const bool bx = ((x + phase_x) / ((period + 1) / 2)) % 2 == 1;
        const bool by = ((y + phase_y) / ((period + 1) / 2)) % 2 == 1;
        const bool on = stripes ? (vertical ? bx : by) : (bx != by);
        const double v = (on ? light : dark) + rng.normal(0.0, 8.0);
        px[y * size + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    out.emplace_back(make_id(prefix, i), bovw::GrayImage(size, size, std::move(px)));
  }
  return out;
}

}  // namespace locallearn::synthetic
