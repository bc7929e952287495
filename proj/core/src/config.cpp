#include "intra/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace intra {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

KvConfig KvConfig::parse_string(const std::string& text) {
    KvConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw std::invalid_argument("[config] bad section header at line " + std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("[config] expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        // strip trailing comment outside quotes
        if (!value.empty() && value.front() != '"' && value.front() != '\'') {
            const size_t hash = value.find('#');
            if (hash != std::string::npos) value = trim(value.substr(0, hash));
        }
        if (key.empty()) throw std::invalid_argument("[config] empty key at line " + std::to_string(lineno));
        cfg.values_[section.empty() ? key : section + "." + key] = unquote(value);
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("[config] cannot open " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_string(buf.str());
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int64_t KvConfig::get_int(const std::string& key, int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (...) {
        throw std::invalid_argument("[config] not an integer: " + key + " = " + it->second);
    }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw std::invalid_argument("[config] not a number: " + key + " = " + it->second);
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("[config] not a boolean: " + key + " = " + it->second);
}

std::string KvConfig::to_string() const {
    // Bare keys first so re-parsing never folds them into a section.
    std::map<std::string, std::map<std::string, std::string>> grouped;
    std::ostringstream os;
    for (const auto& [full_key, value] : values_) {
        const size_t dot = full_key.find('.');
        if (dot == std::string::npos) {
            os << full_key << " = \"" << value << "\"\n";
        } else {
            grouped[full_key.substr(0, dot)][full_key.substr(dot + 1)] = value;
        }
    }
    for (const auto& [section, kv] : grouped) {
        os << "[" << section << "]\n";
        for (const auto& [key, value] : kv) os << key << " = \"" << value << "\"\n";
    }
    return os.str();
}

}  // namespace intra
