#include "locallearn/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "locallearn/errors.hpp"

namespace locallearn::bovw {

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), pixels_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width * height) fail(ErrorKind::DimMismatch, "pixel count does not match image size");
}

GrayImage flip_horizontal(const GrayImage& img) {
  GrayImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) out.at(img.width() - 1 - x, y) = img.at(x, y);
  return out;
}

namespace {

std::size_t read_header_int(std::istream& in) {
  int c = in.get();
  for (;;) {
    while (c != EOF && std::isspace(c)) c = in.get();
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    break;
  }
  if (c == EOF || !std::isdigit(c)) fail(ErrorKind::MalformedFile, "bad PGM header");
  std::size_t v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + static_cast<std::size_t>(c - '0');
    if (v > (1u << 20)) fail(ErrorKind::MalformedFile, "PGM header value too large");
    c = in.get();
  }
  if (c == EOF || !std::isspace(c)) fail(ErrorKind::MalformedFile, "bad PGM header");
  return v;
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5')
    fail(ErrorKind::MalformedFile, "not a binary PGM (P5) file");
  const std::size_t width = read_header_int(in);
  const std::size_t height = read_header_int(in);
  const std::size_t maxval = read_header_int(in);
  if (width == 0 || height == 0) fail(ErrorKind::MalformedFile, "PGM with zero size");
  if (maxval == 0 || maxval > 255) fail(ErrorKind::MalformedFile, "only 8-bit PGM is supported");
  std::vector<std::uint8_t> pixels(width * height);
  if (!in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    fail(ErrorKind::MalformedFile, "truncated PGM pixel data");
  if (maxval != 255)
    for (auto& p : pixels) p = static_cast<std::uint8_t>(std::min<std::size_t>(255, p * 255 / maxval));
  return GrayImage(width, height, std::move(pixels));
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  try {
    return read_pgm(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.pixels().size()));
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  write_pgm(out, img);
}

std::vector<std::pair<std::string, GrayImage>> load_pgm_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::IoError, "'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, GrayImage>> out;
  out.reserve(files.size());
  for (const auto& f : files) out.emplace_back(f.stem().string(), load_pgm(f));
  return out;
}

}  // namespace locallearn::bovw
