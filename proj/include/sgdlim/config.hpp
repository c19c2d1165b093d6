#pragma once

// Flat key-value experiment configs: one `key = value` per line, `#` starts
// a comment, nesting spelled with dotted keys (`sde.sigma2 = 0.1`). Parsing
// keeps insertion order so serialize(parse(text)) is idempotent, and every
// lookup marks its key as consumed so callers can reject unknown keys by
// name.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdlim::config {

struct ParseError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

} // namespace detail

class KVConfig {
 public:
  KVConfig() = default;

  static KVConfig parse(const std::string& text) {
    KVConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ParseError("config line " + std::to_string(lineno) + ": empty key");
      cfg.set(key, value);
    }
    return cfg;
  }

  // later assignments win, but a key keeps its first position so round
  // trips are stable
  void set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it == index_.end()) {
      index_[key] = entries_.size();
      entries_.push_back({key, value});
    } else {
      entries_[it->second].second = value;
    }
  }

  bool has(const std::string& key) const { return index_.count(key) > 0; }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

  std::string get_string(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw ParseError("config: missing required key '" + key + "'");
    consumed_.push_back(key);
    return entries_[it->second].second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long get_int(const std::string& key) const {
    const std::string v = get_string(key);
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw ParseError("config: key '" + key + "' is not an integer: '" + v + "'");
    return x;
  }
  long get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("config: key '" + key + "' is not a boolean: '" + v + "'");
  }

  // comma-separated scalar lists, e.g. `outputs = sgd,volterra`
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(get_string(key));
    while (std::getline(in, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : get_list(key)) out.push_back(to_double(key, s));
    return out;
  }

  // keys never touched by any getter; the CLI refuses to run when this is
  // nonempty so typos fail loudly instead of silently using defaults
  std::vector<std::string> unknown_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
      if (std::find(consumed_.begin(), consumed_.end(), k) == consumed_.end()) out.push_back(k);
    return out;
  }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw ParseError("config: key '" + key + "' is not a number: '" + v + "'");
    return x;
  }

  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
  mutable std::vector<std::string> consumed_;
};

} // namespace sgdlim::config
