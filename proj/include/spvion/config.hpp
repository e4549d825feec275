#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// INI-style configuration: `[section]` headers, `key = value` pairs, `#`
// comments.  Keys carry their unit as a suffix (e.g. `doping_cm3`,
// `wavelength_nm`) so a config file is unambiguous without a manual.
// Section and key order is preserved for faithful round-trips.

namespace spvion {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class Config {
 public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static Config parse(const std::string& text, const std::string& origin = "<string>") {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = strip(s.substr(1, s.size() - 2));
        if (section.empty())
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
        cfg.section_ref(section);
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value, got '" + s + "'");
      std::string key = strip(s.substr(0, eq));
      std::string value = strip(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.set(section, key, value);
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
  }

  const std::string& get_str(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) throw ConfigError("missing key [" + section + "] " + key);
    return *v;
  }
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v ? *v : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    return to_double(get_str(section, key), section, key);
  }
  double get_double(const std::string& section, const std::string& key, double fallback) const {
    const std::string* v = find(section, key);
    return v ? to_double(*v, section, key) : fallback;
  }

  long get_int(const std::string& section, const std::string& key, long fallback) const {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    std::size_t pos = 0;
    long out = 0;
    try {
      out = std::stol(*v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("[" + section + "] " + key + ": not an integer: '" + *v + "'");
    }
    if (pos != v->size())
      throw ConfigError("[" + section + "] " + key + ": not an integer: '" + *v + "'");
    return out;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: '" + *v + "'");
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    Section& sec = section_ref(section);
    for (auto& kv : sec) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    sec.emplace_back(key, value);
  }
  void set_double(const std::string& section, const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    set(section, key, buf);
  }

  std::string serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [name, sec] : sections_) {
      if (!first) out << "\n";
      first = false;
      out << "[" << name << "]\n";
      for (const auto& [k, v] : sec) out << k << " = " << v << "\n";
    }
    return out.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << serialize();
  }

  const std::vector<std::pair<std::string, Section>>& sections() const { return sections_; }

  // FNV-1a 64-bit over the canonical serialization; stamped into output files
  // so every artifact can be traced to the exact inputs that produced it.
  std::uint64_t hash() const {
    const std::string s = serialize();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }
  std::string hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

 private:
  std::vector<std::pair<std::string, Section>> sections_;

  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static double to_double(const std::string& v, const std::string& section,
                          const std::string& key) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("[" + section + "] " + key + ": not a number: '" + v + "'");
    }
    if (pos != v.size())
      throw ConfigError("[" + section + "] " + key + ": not a number: '" + v + "'");
    return out;
  }

  Section& section_ref(const std::string& name) {
    for (auto& s : sections_)
      if (s.first == name) return s.second;
    sections_.emplace_back(name, Section{});
    return sections_.back().second;
  }

  const std::string* find(const std::string& section, const std::string& key) const {
    for (const auto& s : sections_) {
      if (s.first != section) continue;
      for (const auto& kv : s.second)
        if (kv.first == key) return &kv.second;
    }
    return nullptr;
  }
};

}  // namespace spvion
