#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace locallearn::bovw {

/// 8-bit grayscale image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

GrayImage flip_horizontal(const GrayImage& img);

/// Binary PGM (P5) with maxval <= 255. Throws MalformedFile, IoError.
GrayImage read_pgm(std::istream& in);
GrayImage load_pgm(const std::filesystem::path& path);
void write_pgm(std::ostream& out, const GrayImage& img);
void save_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Every *.pgm in `dir`, sorted by file name; the id is the file stem.
std::vector<std::pair<std::string, GrayImage>> load_pgm_directory(const std::filesystem::path& dir);

}  // namespace locallearn::bovw
