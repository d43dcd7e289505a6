#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "locallearn/image.hpp"

namespace locallearn::bovw {

inline constexpr std::size_t kSpatialBins = 4;
inline constexpr std::size_t kOrientationBins = 8;
inline constexpr std::size_t kDescriptorDim = kSpatialBins * kSpatialBins * kOrientationBins;  // 128

struct DenseSiftConfig {
  /// Spatial bin side in pixels, one descriptor grid per entry.
  std::vector<std::size_t> bin_sizes{4, 6, 8, 10};
  std::size_t step = 2;
  /// Descriptors whose contrast (histogram norm over total window weight)
  /// falls below this are set to zero.
  double contrast_threshold = 0.005;
  /// Pre-smoothing sigma per scale is bin_size / magnification.
  double magnification = 6.0;
  /// Gaussian window sigma in units of bin size.
  double window_size = 1.5;

  void validate() const;
};

/// Upright SIFT descriptor. Layout: (row_bin * 4 + col_bin) * 8 + orientation,
/// orientation bin o covering angle o * 45 degrees (image y axis points down).
struct Descriptor {
  std::array<float, kDescriptorDim> values{};
  double x = 0.0;  // center in pixel coordinates (pixel centers at integers)
  double y = 0.0;
  std::size_t scale = 0;  // bin size
};

/// Descriptors on a regular grid (spacing cfg.step) at every scale, in
/// scale-major then row-major frame order. Throws ImageTooSmall when the
/// image is under 16x16 or a scale's 4x4-bin window does not fit.
std::vector<Descriptor> dense_sift(const GrayImage& img, const DenseSiftConfig& cfg);

}  // namespace locallearn::bovw
