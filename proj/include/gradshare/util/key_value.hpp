#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gradshare::util {

/// Invalid or unknown configuration entry. key() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what);
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Flat `key = value` text. Blank lines and lines starting with '#' are ignored.
// Values are typed on read; every read marks the key consumed so that leftovers
// can be rejected as unknown keys.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, const std::string& source = "<config>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<std::int64_t> get_int_list(const std::string& key, const std::vector<std::int64_t>& fallback);

  /// Throws ConfigError for the first key never read.
  void reject_unknown() const;

 private:
  std::optional<std::string> take(const std::string& key);

  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::set<std::string> consumed_;
};

}  // namespace gradshare::util
