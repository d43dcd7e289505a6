#include "locallearn/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "locallearn/errors.hpp"

namespace locallearn {

namespace {

constexpr std::string_view kTextMagic = "#locallearn-features v1 dim=";
constexpr std::array<char, 4> kBinaryMagic = {'L', 'L', 'F', 'B'};
constexpr std::uint32_t kBinaryVersion = 1;

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  return out;
}

void check_dim(std::size_t header_dim, std::optional<std::size_t> expected) {
  if (expected && *expected != header_dim)
    fail(ErrorKind::DimMismatch, "expected dim " + std::to_string(*expected) + ", file has dim " +
                                     std::to_string(header_dim));
}

[[noreturn]] void non_finite(std::size_t row, std::size_t column) {
  Error e(ErrorKind::NonFiniteValue,
          "non-finite value at row " + std::to_string(row) + ", column " + std::to_string(column));
  e.row = row;
  e.column = column;
  throw e;
}

bool getline_lf(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename UInt>
void put_le(std::ostream& out, UInt v) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    fail(ErrorKind::MalformedFile, "truncated binary feature file");
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

std::string format_real(double v) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

FeatureMatrix read_features_text(std::istream& in, std::optional<std::size_t> expected_dim) {
  std::string line;
  if (!getline_lf(in, line) || !line.starts_with(kTextMagic))
    fail(ErrorKind::MalformedFile, "missing '#locallearn-features v1 dim=<D>' header");
  std::size_t dim = 0;
  {
    const std::string_view rest = std::string_view(line).substr(kTextMagic.size());
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), dim);
    if (ec != std::errc{} || ptr != rest.data() + rest.size() || rest.empty())
      fail(ErrorKind::MalformedFile, "bad dim in header: '" + line + "'");
  }
  check_dim(dim, expected_dim);

  std::vector<std::string> ids;
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  std::size_t row = 0;
  while (getline_lf(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::string_view rest(line);
    auto comma = rest.find(',');
    std::string id(comma == std::string_view::npos ? rest : rest.substr(0, comma));
    if (id.empty()) fail(ErrorKind::MalformedFile, "empty sample id on data row " + std::to_string(row));
    if (!seen.insert(id).second)
      fail(ErrorKind::MalformedFile, "duplicate sample id '" + id + "'");
    std::size_t column = 0;
    while (comma != std::string_view::npos) {
      rest.remove_prefix(comma + 1);
      comma = rest.find(',');
      const std::string_view field = comma == std::string_view::npos ? rest : rest.substr(0, comma);
      ++column;
      if (column > dim)
        fail(ErrorKind::DimMismatch, "data row " + std::to_string(row) + " has more than " +
                                         std::to_string(dim) + " values");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec == std::errc::result_out_of_range) non_finite(row, column);
      if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
        fail(ErrorKind::MalformedFile, "bad real '" + std::string(field) + "' at row " +
                                           std::to_string(row) + ", column " + std::to_string(column));
      if (!std::isfinite(v)) non_finite(row, column);
      values.push_back(v);
    }
    if (column != dim)
      fail(ErrorKind::DimMismatch, "data row " + std::to_string(row) + " has " +
                                       std::to_string(column) + " values, header says " +
                                       std::to_string(dim));
    ids.push_back(std::move(id));
  }
  return FeatureMatrix(dim, std::move(ids), std::move(values));
}

FeatureMatrix read_features_binary(std::istream& in, std::optional<std::size_t> expected_dim) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kBinaryMagic)
    fail(ErrorKind::MalformedFile, "bad magic, expected LLFB");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kBinaryVersion)
    fail(ErrorKind::MalformedFile, "unsupported binary version " + std::to_string(version));
  const std::size_t dim = get_le<std::uint32_t>(in);
  const std::uint64_t n = get_le<std::uint64_t>(in);
  check_dim(dim, expected_dim);

  std::vector<std::string> ids;
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  for (std::uint64_t r = 0; r < n; ++r) {
    const std::uint16_t len = get_le<std::uint16_t>(in);
    std::string id(len, '\0');
    if (len > 0 && !in.read(id.data(), len)) fail(ErrorKind::MalformedFile, "truncated sample id");
    if (id.empty()) fail(ErrorKind::MalformedFile, "empty sample id");
    if (!seen.insert(id).second) fail(ErrorKind::MalformedFile, "duplicate sample id '" + id + "'");
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = std::bit_cast<double>(get_le<std::uint64_t>(in));
      if (!std::isfinite(v)) non_finite(r + 1, c + 1);
      values.push_back(v);
    }
    ids.push_back(std::move(id));
  }
  if (in.peek() != std::char_traits<char>::eof())
    fail(ErrorKind::MalformedFile, "trailing bytes after last sample");
  return FeatureMatrix(dim, std::move(ids), std::move(values));
}

FeatureMatrix load_features(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  in.clear();
  in.seekg(0);
  if (head == kBinaryMagic) return read_features_binary(in, expected_dim);
  return read_features_text(in, expected_dim);
}

void write_features_text(std::ostream& out, const FeatureMatrix& m) {
  out << kTextMagic << m.dim() << '\n';
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    out << m.sample_id(i);
    for (double v : m.row(i)) out << ',' << format_real(v);
    out << '\n';
  }
}

void write_features_binary(std::ostream& out, const FeatureMatrix& m) {
  out.write(kBinaryMagic.data(), kBinaryMagic.size());
  put_le<std::uint32_t>(out, kBinaryVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  put_le<std::uint64_t>(out, m.n_samples());
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    const auto& id = m.sample_id(i);
    if (id.size() > 0xffff) fail(ErrorKind::InvalidArgument, "sample id longer than 65535 bytes");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (double v : m.row(i)) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& m, FeatureFormat format) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  if (format == FeatureFormat::Binary)
    write_features_binary(out, m);
  else
    write_features_text(out, m);
  if (!out) fail(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

LabelList load_label_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  LabelList out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (getline_lf(in, line)) {
    ++lineno;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size())
      fail(ErrorKind::MalformedFile, path.string() + ":" + std::to_string(lineno) +
                                         ": expected 'sample_id,class_name'");
    std::string id = line.substr(0, comma);
    if (!seen.insert(id).second)
      fail(ErrorKind::MalformedFile, path.string() + ": duplicate sample id '" + id + "'");
    out.emplace_back(std::move(id), std::string(trim(std::string_view(line).substr(comma + 1))));
  }
  return out;
}

void save_label_file(const std::filesystem::path& path, const LabelList& labels) {
  auto out = open_out(path);
  for (const auto& [id, name] : labels) out << id << ',' << name << '\n';
}

LabelMap load_label_map(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> names;
  std::string line;
  while (getline_lf(in, line)) {
    const auto name = trim(line);
    if (name.empty() || name.front() == '#') continue;
    names.emplace_back(name);
  }
  return LabelMap(std::move(names));
}

void save_label_map(const std::filesystem::path& path, const LabelMap& map) {
  auto out = open_out(path);
  for (const auto& name : map.names()) out << name << '\n';
}

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

std::vector<std::pair<std::string, Split>> load_split_file(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, Split>> out;
  for (auto& [id, name] : load_label_file(path)) {
    Split s;
    if (name == "train")
      s = Split::Train;
    else if (name == "validation" || name == "val")
      s = Split::Validation;
    else if (name == "test")
      s = Split::Test;
    else
      fail(ErrorKind::MalformedFile, path.string() + ": unknown split '" + name + "' for '" + id + "'");
    out.emplace_back(std::move(id), s);
  }
  return out;
}

void save_split_file(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Split>>& splits) {
  auto out = open_out(path);
  for (const auto& [id, s] : splits) out << id << ',' << split_name(s) << '\n';
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << contents;
  if (!out) fail(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

}  // namespace locallearn
