#include "maner/configfile.hpp"

#include <fstream>
#include <sstream>

namespace maner {

namespace {

std::string trim(const std::string& s) {
  const size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return "";
  }
  const size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!cfg.values_.emplace(key, value).second) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  consumed_[key] = true;
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  consumed_[key] = true;
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  try {
    size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' needs an integer, got '" + it->second + "'");
  }
}

uint64_t KeyValueConfig::get_u64(const std::string& key, uint64_t fallback) const {
  consumed_[key] = true;
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' needs an unsigned integer, got '" +
                      it->second + "'");
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  consumed_[key] = true;
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' needs a number, got '" + it->second + "'");
  }
}

std::vector<std::string> KeyValueConfig::unconsumed() const {
  std::vector<std::string> keys;
  for (const auto& [key, value] : values_) {
    if (consumed_.count(key) == 0) {
      keys.push_back(key);
    }
  }
  return keys;
}

}  // namespace maner
