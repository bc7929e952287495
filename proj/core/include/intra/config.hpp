#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace intra {

/// TOML-style key/value file: `[section]` headers, `key = value` lines,
/// `#` comments; values are quoted strings, integers, floats or booleans.
/// Keys are addressed as "section.key" (or bare "key" before any section).
class KvConfig {
  public:
    static KvConfig parse_file(const std::filesystem::path& path);
    static KvConfig parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Round-trippable text form (sections reconstructed from key prefixes).
    std::string to_string() const;

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace intra
