#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace locallearn {

// Plain key-value configuration text:
//
//   # comment to end of line
//   key = value
//
// Keys are [A-Za-z0-9_.-]+ and may appear once. Values run to the end of
// the line (a trailing `# ...` is stripped) and are trimmed. Lists are
// comma-separated.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KvConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.contains(key); }
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, std::string fallback) const;
  std::size_t get_count(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_counts(const std::string& key, std::vector<std::size_t> fallback) const;
  std::vector<double> get_reals(const std::string& key, std::vector<double> fallback) const;

  /// Keys starting with `prefix`, with the prefix removed, in sorted order.
  std::vector<std::string> suffixes(std::string_view prefix) const;

  /// MalformedFile if any key is neither listed nor matches a listed prefix
  /// (entries ending in '.').
  void reject_unknown(std::initializer_list<std::string_view> known) const;

  const std::string& origin() const noexcept { return origin_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

std::size_t parse_count(std::string_view text);
double parse_real(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace locallearn
