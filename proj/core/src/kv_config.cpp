#include "locallearn/kv_config.hpp"

#include <charconv>
#include <cmath>

#include "locallearn/errors.hpp"
#include "locallearn/io.hpp"

namespace locallearn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '.' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::size_t parse_count(std::string_view text) {
  text = trim(text);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    fail(ErrorKind::InvalidArgument, "expected a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

double parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v))
    fail(ErrorKind::InvalidArgument, "expected a finite real, got '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

KvConfig KvConfig::parse(std::string_view text, std::string_view origin) {
  KvConfig cfg;
  cfg.origin_ = std::string(origin);
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos) fail(ErrorKind::MalformedFile, where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (!valid_key(key)) fail(ErrorKind::MalformedFile, where + ": bad key '" + key + "'");
    if (!cfg.entries_.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
      fail(ErrorKind::MalformedFile, where + ": duplicate key '" + key + "'");
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KvConfig::get_string(const std::string& key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

std::size_t KvConfig::get_count(const std::string& key, std::size_t fallback) const {
  auto v = get(key);
  return v ? parse_count(*v) : fallback;
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size() || v->empty())
    fail(ErrorKind::InvalidArgument, origin_ + ": bad integer for '" + key + "'");
  return out;
}

double KvConfig::get_real(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_real(*v) : fallback;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "on" || *v == "yes" || *v == "1") return true;
  if (*v == "false" || *v == "off" || *v == "no" || *v == "0") return false;
  fail(ErrorKind::InvalidArgument, origin_ + ": bad boolean for '" + key + "': " + *v);
}

std::vector<std::size_t> KvConfig::get_counts(const std::string& key, std::vector<std::size_t> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_count(item));
  return out;
}

std::vector<double> KvConfig::get_reals(const std::string& key, std::vector<double> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(parse_real(item));
  return out;
}

std::vector<std::string> KvConfig::suffixes(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_)
    if (key.size() > prefix.size() && key.starts_with(prefix)) out.push_back(key.substr(prefix.size()));
  return out;
}

void KvConfig::reject_unknown(std::initializer_list<std::string_view> known) const {
  for (const auto& [key, value] : entries_) {
    bool ok = false;
    for (auto k : known) {
      if (k.ends_with('.') ? (key.size() > k.size() && key.starts_with(k)) : key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) fail(ErrorKind::MalformedFile, origin_ + ": unknown key '" + key + "'");
  }
}

}  // namespace locallearn
