#include "gradshare/util/key_value.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gradshare::util {

ConfigError::ConfigError(std::string key, const std::string& what)
    : std::invalid_argument(what), key_(std::move(key)) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text, const std::string& source) {
  KeyValueFile kv;
  kv.source_ = source;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("", source + ":" + std::to_string(line_no) + ": empty key");
    if (kv.values_.count(key)) {
      throw ConfigError(key, source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.values_.emplace(key, std::move(value));
    kv.lines_.emplace(key, line_no);
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::optional<std::string> KeyValueFile::take(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  consumed_.insert(key);
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) {
  return take(key).value_or(fallback);
}

double KeyValueFile::get_double(const std::string& key, double fallback) {
  auto v = take(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, "key '" + key + "': expected a number, got '" + *v + "'");
  }
}

std::int64_t KeyValueFile::get_int(const std::string& key, std::int64_t fallback) {
  auto v = take(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw ConfigError(key, "key '" + key + "': expected an integer, got '" + *v + "'");
  }
  return out;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) {
  auto v = take(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "off") return false;
  throw ConfigError(key, "key '" + key + "': expected true/false, got '" + *v + "'");
}

std::vector<std::int64_t> KeyValueFile::get_int_list(const std::string& key,
                                                     const std::vector<std::int64_t>& fallback) {
  auto v = take(key);
  if (!v) return fallback;
  std::vector<std::int64_t> out;
  std::string_view rest = *v;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto item = trim(rest.substr(0, comma));
    std::int64_t x = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      throw ConfigError(key, "key '" + key + "': expected a comma-separated integer list, got '" + *v + "'");
    }
    out.push_back(x);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

void KeyValueFile::reject_unknown() const {
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) {
      throw ConfigError(key, source_ + ":" + std::to_string(lines_.at(key)) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace gradshare::util
