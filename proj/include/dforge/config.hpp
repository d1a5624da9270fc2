#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace dforge {

/// `key = value` text with `#` comments. Typed getters raise ConfigError
/// naming the key and its line.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<long long> get_int_list(const std::string& key) const;

  std::vector<std::string> keys() const;
  /// Keys never read through a getter.
  std::vector<std::string> unused_keys() const;

 private:
  std::string where(const std::string& key) const;
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  mutable std::set<std::string> used_;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& data);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

}  // namespace dforge
