#include "eradate/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "eradate/error.hpp"
#include "eradate/image.hpp"

namespace eradate {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) {
    throw Error(ErrorCode::kBadFormat, "config " + key + ": not a number: " + v);
  }
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) {
    throw Error(ErrorCode::kBadFormat, "config " + key + ": not an integer: " + v);
  }
  return out;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw Error(ErrorCode::kBadFormat, "config line " + std::to_string(number) +
                                               ": unterminated section");
      }
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kBadFormat,
                  "config line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::kBadFormat, "config line " + std::to_string(number) + ": empty key");
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else {
      const auto hash = value.find(" #");
      if (hash != std::string::npos) value = trim(std::string_view(value).substr(0, hash));
    }
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
      value = value.substr(1, value.size() - 2);
    }
    c.values_[section.empty() ? key : section + "." + key] = value;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long Config::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_long(key, it->second);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(key, it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kBadFormat, "config " + key + ": not a boolean: " + it->second);
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(it->second)) out.push_back(to_double(key, item));
  return out;
}

std::vector<long> Config::get_ints(const std::string& key,
                                   const std::vector<long>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<long> out;
  for (const auto& item : split_list(it->second)) out.push_back(to_long(key, item));
  return out;
}

void Config::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::kBadFormat, "unknown config key " + key);
    }
  }
}

}  // namespace eradate
