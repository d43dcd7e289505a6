#include "locallearn/dense_sift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "locallearn/errors.hpp"

namespace locallearn::bovw {

namespace {

constexpr std::size_t kMinSide = 16;
constexpr float kClamp = 0.2f;

// Separable Gaussian blur with edge replication.
std::vector<float> blur(const std::vector<float>& src, std::size_t w, std::size_t h, double sigma) {
  if (sigma < 0.01) return src;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> kernel(2 * static_cast<std::size_t>(radius) + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = static_cast<float>(v);
    total += v;
  }
  for (auto& k : kernel) k = static_cast<float>(k / total);

  auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
  std::vector<float> tmp(src.size()), out(src.size());
  const int W = static_cast<int>(w), H = static_cast<int>(h);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      float s = 0.f;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[static_cast<std::size_t>(i + radius)] * src[static_cast<std::size_t>(y * W + clampi(x + i, W))];
      tmp[static_cast<std::size_t>(y * W + x)] = s;
    }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      float s = 0.f;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(clampi(y + i, H) * W + x)];
      out[static_cast<std::size_t>(y * W + x)] = s;
    }
  return out;
}

struct GradientField {
  std::vector<float> magnitude;
  std::vector<std::uint8_t> bin;  // lower orientation bin
  std::vector<float> frac;        // weight of bin + 1
};

GradientField gradients(const std::vector<float>& img, std::size_t w, std::size_t h) {
  GradientField g;
  g.magnitude.resize(w * h);
  g.bin.resize(w * h);
  g.frac.resize(w * h);
  auto px = [&](std::size_t x, std::size_t y) { return img[y * w + x]; };
  constexpr double kBinWidth = 2.0 * std::numbers::pi / kOrientationBins;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      float gx, gy;
      if (x == 0)
        gx = px(1, y) - px(0, y);
      else if (x + 1 == w)
        gx = px(x, y) - px(x - 1, y);
      else
        gx = 0.5f * (px(x + 1, y) - px(x - 1, y));
      if (y == 0)
        gy = px(x, 1) - px(x, 0);
      else if (y + 1 == h)
        gy = px(x, y) - px(x, y - 1);
      else
        gy = 0.5f * (px(x, y + 1) - px(x, y - 1));
      const std::size_t i = y * w + x;
      g.magnitude[i] = std::sqrt(gx * gx + gy * gy);
      double angle = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
      if (angle < 0) angle += 2.0 * std::numbers::pi;
      double o = angle / kBinWidth;
      double lower = std::floor(o);
      g.frac[i] = static_cast<float>(o - lower);
      g.bin[i] = static_cast<std::uint8_t>(static_cast<std::size_t>(lower) % kOrientationBins);
    }
  return g;
}

// Per-offset contribution of a pixel inside one descriptor window.
struct WindowTap {
  std::size_t dx, dy;
  int bx0, by0;    // lower spatial bins (may be -1 or 3)
  float wx1, wy1;  // weights of the upper bins
  float gauss;
};

std::vector<WindowTap> window_taps(std::size_t s, double window_size) {
  const std::size_t side = kSpatialBins * s;
  const double center = 0.5 * static_cast<double>(side) - 0.5;
  const double sigma = window_size * static_cast<double>(s);
  std::vector<WindowTap> taps;
  taps.reserve(side * side);
  for (std::size_t dy = 0; dy < side; ++dy)
    for (std::size_t dx = 0; dx < side; ++dx) {
      const double u = (static_cast<double>(dx) + 0.5) / static_cast<double>(s) - 0.5;
      const double v = (static_cast<double>(dy) + 0.5) / static_cast<double>(s) - 0.5;
      const double fu = std::floor(u), fv = std::floor(v);
      const double rx = static_cast<double>(dx) - center, ry = static_cast<double>(dy) - center;
      taps.push_back({dx, dy, static_cast<int>(fu), static_cast<int>(fv), static_cast<float>(u - fu),
                      static_cast<float>(v - fv),
                      static_cast<float>(std::exp(-0.5 * (rx * rx + ry * ry) / (sigma * sigma)))});
    }
  return taps;
}

void finalize(Descriptor& d, double total_weight, double threshold) {
  double sq = 0.0;
  for (float v : d.values) sq += static_cast<double>(v) * v;
  const double norm = std::sqrt(sq);
  if (norm == 0.0 || norm / total_weight < threshold) {
    d.values.fill(0.f);
    return;
  }
  for (auto& v : d.values) v = std::min(static_cast<float>(v / norm), kClamp);
  sq = 0.0;
  for (float v : d.values) sq += static_cast<double>(v) * v;
  const double renorm = std::sqrt(sq);
  for (auto& v : d.values) v = std::clamp(static_cast<float>(v / renorm), 0.f, 1.f);
}

}  // namespace

void DenseSiftConfig::validate() const {
  if (bin_sizes.empty()) fail(ErrorKind::InvalidArgument, "dense SIFT needs at least one bin size");
  for (auto s : bin_sizes)
    if (s == 0) fail(ErrorKind::InvalidArgument, "dense SIFT bin size must be >= 1");
  if (step == 0) fail(ErrorKind::InvalidArgument, "dense SIFT step must be >= 1");
  if (!(magnification > 0) || !(window_size > 0))
    fail(ErrorKind::InvalidArgument, "dense SIFT magnification and window size must be positive");
}

std::vector<Descriptor> dense_sift(const GrayImage& img, const DenseSiftConfig& cfg) {
  cfg.validate();
  const std::size_t w = img.width(), h = img.height();
  if (w < kMinSide || h < kMinSide)
    fail(ErrorKind::ImageTooSmall, std::to_string(w) + "x" + std::to_string(h) + " is below 16x16");
  for (auto s : cfg.bin_sizes)
    if (kSpatialBins * s > w || kSpatialBins * s > h)
      fail(ErrorKind::ImageTooSmall, "bin size " + std::to_string(s) + " needs a " +
                                         std::to_string(kSpatialBins * s) + "-pixel window");

  std::vector<float> base(w * h);
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = static_cast<float>(img.pixels()[i]) / 255.f;

  std::vector<Descriptor> out;
  for (auto s : cfg.bin_sizes) {
    const auto smoothed = blur(base, w, h, static_cast<double>(s) / cfg.magnification);
    const auto grad = gradients(smoothed, w, h);
    const auto taps = window_taps(s, cfg.window_size);
    const std::size_t side = kSpatialBins * s;

    double total_weight = 0.0;
    for (const auto& t : taps) {
      const double wx0 = (t.bx0 >= 0 ? 1.0 - t.wx1 : 0.0) + (t.bx0 + 1 < static_cast<int>(kSpatialBins) ? t.wx1 : 0.0);
      const double wy0 = (t.by0 >= 0 ? 1.0 - t.wy1 : 0.0) + (t.by0 + 1 < static_cast<int>(kSpatialBins) ? t.wy1 : 0.0);
      total_weight += t.gauss * wx0 * wy0;
    }

    for (std::size_t y0 = 0; y0 + side <= h; y0 += cfg.step)
      for (std::size_t x0 = 0; x0 + side <= w; x0 += cfg.step) {
        Descriptor d;
        d.x = static_cast<double>(x0) + 0.5 * static_cast<double>(side) - 0.5;
        d.y = static_cast<double>(y0) + 0.5 * static_cast<double>(side) - 0.5;
        d.scale = s;
        for (const auto& t : taps) {
          const std::size_t p = (y0 + t.dy) * w + (x0 + t.dx);
          const float m = grad.magnitude[p] * t.gauss;
          if (m == 0.f) continue;
          const std::size_t o0 = grad.bin[p];
          const std::size_t o1 = (o0 + 1) % kOrientationBins;
          const float fo = grad.frac[p];
          for (int by = t.by0; by <= t.by0 + 1; ++by) {
            if (by < 0 || by >= static_cast<int>(kSpatialBins)) continue;
            const float wy = by == t.by0 ? 1.f - t.wy1 : t.wy1;
            for (int bx = t.bx0; bx <= t.bx0 + 1; ++bx) {
              if (bx < 0 || bx >= static_cast<int>(kSpatialBins)) continue;
              const float wx = bx == t.bx0 ? 1.f - t.wx1 : t.wx1;
              const float mass = m * wx * wy;
              const std::size_t cell = (static_cast<std::size_t>(by) * kSpatialBins + static_cast<std::size_t>(bx)) * kOrientationBins;
              d.values[cell + o0] += mass * (1.f - fo);
              d.values[cell + o1] += mass * fo;
            }
          }
        }
        finalize(d, total_weight, cfg.contrast_threshold);
        out.push_back(d);
      }
  }
  return out;
}

}  // namespace locallearn::bovw
