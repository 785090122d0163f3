#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace eradate {

// Flat key = value settings. Lines starting with '#' or ';' are comments,
// `[section]` headers prefix following keys with "section.", values may be
// double-quoted, and lists are comma separated.
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<long> get_ints(const std::string& key, const std::vector<long>& fallback) const;

  // Throws BadFormat naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace eradate
