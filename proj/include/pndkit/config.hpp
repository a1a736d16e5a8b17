#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pndkit/error.hpp"
#include "pndkit/io.hpp"

namespace pndkit {

/// Flat `key = value` configuration grouped in `[section]` blocks. Keys are
/// addressed as "section.key"; check_known() rejects keys outside a schema so
/// that typos do not pass silently.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in) {
    Config c;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw InvalidInput("config line " + std::to_string(lineno) + ": unterminated section");
        section = trim(s.substr(1, s.size() - 2));
        if (section.empty()) throw InvalidInput("config line " + std::to_string(lineno) + ": empty section name");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(s.substr(0, eq));
      if (key.empty()) throw InvalidInput("config line " + std::to_string(lineno) + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (!c.values_.emplace(full, trim(s.substr(eq + 1))).second) {
        throw InvalidInput("config line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
      }
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config '" + path + "'");
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }

  std::string require_string(const std::string& key) const {
    auto v = raw(key);
    if (!v) throw InvalidInput("missing config key '" + key + "'");
    return *v;
  }

  double get(const std::string& key, double fallback) const {
    auto v = raw(key);
    return v ? parse_double(*v, "config key '" + key + "'") : fallback;
  }

  long long get_int(const std::string& key, long long fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    const double d = parse_double(*v, "config key '" + key + "'");
    if (d != static_cast<double>(static_cast<long long>(d))) throw InvalidInput("config key '" + key + "' must be an integer");
    return static_cast<long long>(d);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw InvalidInput("config key '" + key + "' must be true or false");
  }

  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split(*v, ',')) out.push_back(parse_double(item, "config key '" + key + "'"));
    return out;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Throws naming the first key outside `known`.
  void check_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_) {
      if (!known.count(k)) throw InvalidInput("unknown config key '" + k + "'");
    }
  }

  /// Canonical text of all entries, for hashing.
  std::string canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
    return os.str();
  }

 private:
  std::map<std::string, std::string> values_;
};

/// Splits "name(a, b, c)" into the name and its numeric arguments; a bare name has none.
inline std::pair<std::string, std::vector<double>> parse_call(const std::string& text, const std::string& key) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos) return {s, {}};
  if (s.back() != ')') throw InvalidInput("config key '" + key + "': expected name(args)");
  std::vector<double> args;
  const std::string inner = trim(s.substr(open + 1, s.size() - open - 2));
  if (!inner.empty()) {
    for (const auto& a : split(inner, ',')) args.push_back(parse_double(a, "config key '" + key + "'"));
  }
  return {trim(s.substr(0, open)), args};
}

}  // namespace pndkit
