#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace examiner {

// Plain-text `key = value` configuration. `#` starts a comment; blank lines are
// ignored; duplicate keys are an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& origin = "<stream>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Keys starting with `prefix`, in sorted order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  // Canonical serialization, one `key = value` per line in key order.
  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

std::vector<std::string> split_list(const std::string& value, char sep = ',');
std::string trim(std::string_view s);

}  // namespace examiner
