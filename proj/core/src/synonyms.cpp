#include "intra/synonyms.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace intra {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string fold(const std::string& s) {
    std::string t = trim(s);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return t;
}

/// Extracts quoted items from a bracketed list like ['a', 'b', 'c'];
/// tolerates backtick or plain-quote styles and unquoted comma-separated items.
std::vector<std::string> parse_bracket_list(const std::string& line) {
    const size_t lo = line.find('[');
    const size_t hi = line.rfind(']');
    if (lo == std::string::npos || hi == std::string::npos || hi <= lo) return {};
    const std::string body = line.substr(lo + 1, hi - lo - 1);

    std::vector<std::string> items;
    std::string cur;
    for (size_t i = 0; i <= body.size(); ++i) {
        if (i == body.size() || body[i] == ',') {
            std::string item = trim(cur);
            while (!item.empty() && (item.front() == '\'' || item.front() == '`' || item.front() == '"')) item.erase(item.begin());
            while (!item.empty() && (item.back() == '\'' || item.back() == '`' || item.back() == '"')) item.pop_back();
            item = trim(item);
            if (!item.empty()) items.push_back(item);
            cur.clear();
        } else {
            cur.push_back(body[i]);
        }
    }
    return items;
}

}  // namespace

void SynonymTable::validate_against(const std::vector<std::string>& vocabulary) const {
    for (const auto& [label, syns] : entries) {
        for (const auto& s : syns) {
            for (const auto& other : vocabulary) {
                if (other == label) continue;
                if (fold(s) == fold(other))
                    throw std::invalid_argument("[synonyms] '" + s + "' for '" + label + "' collides with label '" + other + "'");
            }
        }
    }
}

std::string build_synonym_prompt(const std::vector<std::string>& labels,
                                 const std::map<std::string, std::string>& contexts) {
    if (labels.empty()) throw std::invalid_argument("[synonyms] empty label list");
    std::ostringstream os;
    os << "Give me three synonyms for each verbs in form of ['word1', 'word2', 'word3'].\n";
    for (size_t i = 0; i < labels.size(); ++i) {
        const auto it = contexts.find(labels[i]);
        if (it == contexts.end()) throw std::invalid_argument("[synonyms] missing context object for '" + labels[i] + "'");
        os << (i + 1) << ". '" << labels[i] << "' in context of '" << labels[i] << ' ' << it->second << "'\n";
    }
    return os.str();
}

std::map<std::string, std::vector<std::string>> parse_and_dedupe(const std::string& response,
                                                                 const std::vector<std::string>& queried_labels,
                                                                 const std::vector<std::string>& vocabulary) {
    // Collect numbered bracket lines: index -> raw items.
    std::map<size_t, std::vector<std::string>> numbered;
    std::istringstream is(response);
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || !std::isdigit(static_cast<unsigned char>(t[0]))) continue;
        size_t p = 0;
        while (p < t.size() && std::isdigit(static_cast<unsigned char>(t[p]))) ++p;
        if (p >= t.size() || t[p] != '.') continue;
        const size_t idx = std::stoul(t.substr(0, p));
        if (idx == 0) continue;
        numbered[idx - 1] = parse_bracket_list(t.substr(p + 1));
    }

    std::map<std::string, std::vector<std::string>> out;
    for (size_t i = 0; i < queried_labels.size(); ++i) {
        const std::string& label = queried_labels[i];
        auto it = numbered.find(i);
        if (it == numbered.end() || it->second.empty()) {
            std::cerr << "[synonyms] warning: no parsable synonym list for '" << label << "'\n";
            out[label] = {};
            continue;
        }
        std::vector<std::string> kept;
        for (const auto& raw : it->second) {
            const std::string syn = trim(raw);
            if (syn.empty()) continue;
            bool collides = false;
            for (const auto& other : vocabulary) {
                if (other == label) continue;
                if (fold(syn) == fold(other)) {
                    collides = true;
                    break;
                }
            }
            if (collides) continue;
            const bool dup = std::any_of(kept.begin(), kept.end(),
                                         [&](const std::string& k) { return fold(k) == fold(syn); });
            if (!dup) kept.push_back(syn);
        }
        out[label] = std::move(kept);
    }
    return out;
}

std::string sample_condition_text(const std::string& label, const SynonymTable& table, Rng& rng) {
    const auto it = table.entries.find(label);
    const double u = rng.uniform();
    if (it == table.entries.end() || it->second.empty()) return label;
    if (u >= table.substitute_prob) return label;
    return it->second[rng.uniform_int(it->second.size())];
}

void save_synonyms(const std::filesystem::path& path, const SynonymTable& table) {
    nlohmann::json j;
    j["k_s"] = table.k_s;
    j["p"] = table.substitute_prob;
    j["entries"] = table.entries;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("[synonyms] cannot write " + path.string());
    os << j.dump(2) << '\n';
}

SynonymTable load_synonyms(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("[synonyms] cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(is);
    SynonymTable t;
    t.k_s = j.at("k_s").get<int>();
    t.substitute_prob = j.at("p").get<double>();
    t.entries = j.at("entries").get<std::map<std::string, std::vector<std::string>>>();
    if (t.substitute_prob < 0.0 || t.substitute_prob > 1.0)
        throw std::invalid_argument("[synonyms] p outside [0,1] in " + path.string());
    return t;
}

}  // namespace intra
