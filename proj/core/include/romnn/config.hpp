#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace romnn {

/// Flat key-value text configuration.
///
///   # comment
///   [section]
///   key = value          -> stored as "section.key"
///   other.key = 1, 2, 3  -> dotted keys outside a section are taken verbatim
///
/// Keys are unique; list values are comma separated. Every lookup marks the key
/// as used so that unknown keys can be reported.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::int64_t> get_ints(const std::string& key, std::vector<std::int64_t> fallback) const;

  /// Keys present in the text that no lookup has touched.
  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  const std::string* find(const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

/// Splits a comma-separated list, trimming whitespace; empty input gives {}.
std::vector<std::string> split_list(const std::string& text);
std::vector<std::int64_t> parse_int_list(const std::string& text);

}  // namespace romnn
