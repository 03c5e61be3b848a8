#pragma once

#include <map>
#include <string>
#include <vector>

#include "maner/common.hpp"

namespace maner {

// Flat key=value config text. '#' starts a comment; keys are dotted names.
// Unknown keys are rejected so typos surface as ConfigError naming the key.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  // Keys never consumed by a getter; call after reading everything.
  std::vector<std::string> unconsumed() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> consumed_;
  std::string origin_;
};

}  // namespace maner
