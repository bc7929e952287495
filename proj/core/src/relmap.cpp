#include "intra/relmap.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "intra/rng.hpp"

namespace intra {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string sanitize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

}  // namespace

std::string to_string(RelmapProvenance p) {
    switch (p) {
        case RelmapProvenance::llm: return "llm";
        case RelmapProvenance::wordnet: return "wordnet";
        case RelmapProvenance::word2vec: return "word2vec";
        case RelmapProvenance::cooccurrence: return "cooccurrence";
        case RelmapProvenance::manual: return "manual";
    }
    throw std::logic_error("[relmap] bad provenance");
}

RelmapProvenance relmap_provenance_from_string(const std::string& s) {
    if (s == "llm") return RelmapProvenance::llm;
    if (s == "wordnet") return RelmapProvenance::wordnet;
    if (s == "word2vec") return RelmapProvenance::word2vec;
    if (s == "cooccurrence") return RelmapProvenance::cooccurrence;
    if (s == "manual") return RelmapProvenance::manual;
    throw std::invalid_argument("[relmap] unknown provenance: " + s);
}

size_t RelationshipMap::index_of(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw std::invalid_argument("[relmap] label not in vocabulary: " + label);
    return static_cast<size_t>(it - labels.begin());
}

bool RelationshipMap::contains(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void RelationshipMap::validate() const {
    const size_t n = labels.size();
    if (matrix.size() != n * n) throw std::invalid_argument("[relmap] matrix dimension does not match vocabulary");
    for (size_t i = 0; i < n; ++i) {
        if (at(i, i) != 1) throw std::invalid_argument("[relmap] diagonal entry must be 1 at " + labels[i]);
        for (size_t j = 0; j < n; ++j) {
            if (at(i, j) != 0 && at(i, j) != 1) throw std::invalid_argument("[relmap] non-binary entry");
            if (at(i, j) != at(j, i))
                throw std::invalid_argument("[relmap] asymmetric at (" + labels[i] + ", " + labels[j] + ")");
        }
    }
}

RelationshipMap RelationshipMap::identity(std::vector<std::string> labels, RelmapProvenance prov) {
    RelationshipMap m;
    m.labels = std::move(labels);
    m.provenance = prov;
    const size_t n = m.labels.size();
    m.matrix.assign(n * n, 0);
    for (size_t i = 0; i < n; ++i) m.set(i, i, 1);
    return m;
}

void save_map(const std::filesystem::path& path, const RelationshipMap& map) {
    map.validate();
    nlohmann::json j;
    j["labels"] = map.labels;
    auto rows = nlohmann::json::array();
    for (size_t i = 0; i < map.size(); ++i) {
        auto row = nlohmann::json::array();
        for (size_t k = 0; k < map.size(); ++k) row.push_back(static_cast<int>(map.at(i, k)));
        rows.push_back(std::move(row));
    }
    j["matrix"] = std::move(rows);
    j["provenance"] = to_string(map.provenance);
    if (map.threshold) j["threshold"] = *map.threshold;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("[relmap] cannot write " + path.string());
    os << j.dump(2) << '\n';
}

RelationshipMap load_map(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("[relmap] cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(is);

    RelationshipMap m;
    m.labels = j.at("labels").get<std::vector<std::string>>();
    const auto& rows = j.at("matrix");
    if (rows.size() != m.labels.size()) throw std::invalid_argument("[relmap] matrix row count mismatch in " + path.string());
    m.matrix.reserve(m.labels.size() * m.labels.size());
    for (const auto& row : rows) {
        if (row.size() != m.labels.size()) throw std::invalid_argument("[relmap] matrix column count mismatch");
        for (const auto& v : row) {
            const int x = v.get<int>();
            if (x != 0 && x != 1) throw std::invalid_argument("[relmap] non-binary entry in " + path.string());
            m.matrix.push_back(static_cast<uint8_t>(x));
        }
    }
    m.provenance = relmap_provenance_from_string(j.at("provenance").get<std::string>());
    if (j.contains("threshold") && !j["threshold"].is_null()) m.threshold = j["threshold"].get<double>();
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// CoT prompt and verdict parsing
// ---------------------------------------------------------------------------

std::string build_pair_prompt(const std::string& a, const std::string& b) {
    if (a == b) throw std::invalid_argument("[relmap] diagonal pair is never queried: " + a);
    std::ostringstream os;
    os << "You should clarify each verb's relation whether it is positive pair or negative pair. "
          "Here's some example of the examples of clarification.\n"
          "ex1) 'hold' and 'carry' is 'positive' pair. Because if we do the given interaction to the object "
          "like suitcase, ski, or snowboard, we interacts with the same part of the object. The side part of "
          "the object for 'hold' and 'carry'.\n"
          "ex2) 'hit' and 'carry' is 'positive' pair. Because if we do the given interaction to the object "
          "like baseball bat or badminton racket, we interacts with the same part of the object. The thin "
          "part of the object for 'hit' and 'carry'.\n"
          "ex3) 'cut with' and 'hold' is 'negative' pair. Because if we 'cut with' the object like scissor, "
          "or knife, we interacts with the different part of the object. Sharp part of the object for "
          "'cut with' and 'hold' for handle or dull part.\n"
          "ex4) 'sip' and 'hold' is 'negative' pair. Because if we do the given interaction to the object "
          "like cup, bottle, or wine glass, we interacts with the different part of the object. Rim of the "
          "object for 'sip', and 'hold' for handle or round part.\n"
          "\n"
          "Think of 5 objects that can be commonly interacted with. For each object, describe the "
          "interactions and then list the object parts that should be interacted with step by step. Use "
          "this information to create criteria for classification based on the given example. Specify the "
          "final answer with short format and it should be one of [positive, negative]. "
       << "['" << a << "', '" << b << "'] -> ['positive', 'negative']?";
    return os.str();
}

Verdict parse_verdict(const std::string& response) {
    const std::string text = lower(response);

    // Answer region: after the last explicit marker when present, else the tail.
    size_t start = 0;
    const size_t marker = text.rfind("final answer");
    if (marker != std::string::npos) {
        start = marker;
    } else if (text.size() > 200) {
        start = text.size() - 200;
    }
    const std::string region = text.substr(start);

    const bool pos = region.find("positive") != std::string::npos;
    const bool neg = region.find("negative") != std::string::npos;
    if (pos == neg) return Verdict::unparsed;
    return pos ? Verdict::positive : Verdict::negative;
}

// ---------------------------------------------------------------------------
// Transcript cache
// ---------------------------------------------------------------------------

TranscriptCache::TranscriptCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string TranscriptCache::file_key(const std::string& a, const std::string& b, const std::string& prompt) {
    const auto& lo = std::min(a, b);
    const auto& hi = std::max(a, b);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(prompt)));
    return sanitize(lo) + "__" + sanitize(hi) + "__" + hex + ".json";
}

std::optional<PairTranscript> TranscriptCache::find(const std::string& a, const std::string& b,
                                                    const std::string& prompt) const {
    std::lock_guard lock(mu_);
    ++lookups_;
    const auto path = dir_ / file_key(a, b, prompt);
    std::ifstream is(path);
    if (!is) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(is);
    PairTranscript t;
    t.a = j.at("pair").at(0).get<std::string>();
    t.b = j.at("pair").at(1).get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    t.response = j.at("response").get<std::string>();
    t.verdict = parse_verdict(t.response);
    return t;
}

void TranscriptCache::store(const PairTranscript& t) {
    std::lock_guard lock(mu_);
    nlohmann::json j;
    j["pair"] = {t.a, t.b};
    j["prompt"] = t.prompt;
    j["response"] = t.response;
    j["verdict"] = t.verdict == Verdict::positive ? "positive" : t.verdict == Verdict::negative ? "negative" : "unparsed";
    const auto path = dir_ / file_key(t.a, t.b, t.prompt);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("[relmap] cannot write transcript " + path.string());
    os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Map builders
// ---------------------------------------------------------------------------

RelationshipMap build_map_llm(const std::vector<std::string>& labels, const PairOracle& oracle,
                              TranscriptCache& cache, LlmBuildStats* stats) {
    RelationshipMap map = RelationshipMap::identity(labels, RelmapProvenance::llm);
    LlmBuildStats local;

    auto ask = [&](const std::string& prompt, const std::string& a, const std::string& b) -> std::string {
        if (!oracle) throw std::runtime_error("[relmap] no oracle configured and cache is incomplete for pair (" + a + ", " + b + ")");
        ++local.live_calls;
        try {
            return oracle(prompt);
        } catch (const std::exception& first) {
            ++local.live_calls;  // single retry
            try {
                return oracle(prompt);
            } catch (const std::exception& second) {
                throw std::runtime_error("[relmap] oracle failed for pair (" + a + ", " + b + "): " + second.what());
            }
        }
    };

    for (size_t i = 0; i < labels.size(); ++i) {
        for (size_t j = i + 1; j < labels.size(); ++j) {
            const std::string prompt = build_pair_prompt(labels[i], labels[j]);
            ++local.pair_lookups;
            auto cached = cache.find(labels[i], labels[j], prompt);

            PairTranscript t;
            if (cached) {
                t = *cached;
            } else {
                t.a = std::min(labels[i], labels[j]);
                t.b = std::max(labels[i], labels[j]);
                t.prompt = prompt;
                t.response = ask(prompt, labels[i], labels[j]);
                t.verdict = parse_verdict(t.response);
                cache.store(t);
            }

            if (t.verdict == Verdict::unparsed && oracle) {
                t.response = ask(prompt, labels[i], labels[j]);
                t.verdict = parse_verdict(t.response);
                cache.store(t);
            }
            if (t.verdict == Verdict::unparsed) {
                std::cerr << "[relmap] warning: unparsed verdict for (" << labels[i] << ", " << labels[j]
                          << "), defaulting to negative\n";
                t.verdict = Verdict::negative;
                ++local.defaulted_negative;
            }

            const uint8_t v = t.verdict == Verdict::positive ? 1 : 0;
            map.set(i, j, v);
            map.set(j, i, v);
        }
    }

    map.validate();
    if (stats) *stats = local;
    return map;
}

RelationshipMap build_map_similarity(const std::vector<std::string>& labels, const PairScore& scores,
                                     double threshold, RelmapProvenance provenance) {
    RelationshipMap map = RelationshipMap::identity(labels, provenance);
    map.threshold = threshold;
    for (size_t i = 0; i < labels.size(); ++i) {
        for (size_t j = i + 1; j < labels.size(); ++j) {
            const double s = scores(labels[i], labels[j]);
            if (!(s >= 0.0 && s <= 1.0))
                throw std::invalid_argument("[relmap] score outside [0,1] for (" + labels[i] + ", " + labels[j] + ")");
            const uint8_t v = s >= threshold ? 1 : 0;
            map.set(i, j, v);
            map.set(j, i, v);
        }
    }
    map.validate();
    return map;
}

double ScoreTable::at(const std::string& a, const std::string& b) const {
    const auto ia = std::find(labels.begin(), labels.end(), a);
    const auto ib = std::find(labels.begin(), labels.end(), b);
    if (ia == labels.end() || ib == labels.end())
        throw std::invalid_argument("[relmap] score table missing label: " + (ia == labels.end() ? a : b));
    return scores[static_cast<size_t>(ia - labels.begin()) * labels.size() + static_cast<size_t>(ib - labels.begin())];
}

PairScore ScoreTable::as_fn() const {
    return [table = *this](const std::string& a, const std::string& b) { return table.at(a, b); };
}

ScoreTable load_score_table(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("[relmap] cannot open score table " + path.string());
    nlohmann::json j = nlohmann::json::parse(is);
    ScoreTable t;
    t.labels = j.at("labels").get<std::vector<std::string>>();
    const auto& rows = j.at("scores");
    if (rows.size() != t.labels.size()) throw std::invalid_argument("[relmap] score table row count mismatch");
    for (const auto& row : rows) {
        if (row.size() != t.labels.size()) throw std::invalid_argument("[relmap] score table column count mismatch");
        for (const auto& v : row) t.scores.push_back(v.get<double>());
    }
    for (size_t i = 0; i < t.labels.size(); ++i)
        for (size_t j = 0; j < t.labels.size(); ++j)
            if (t.scores[i * t.labels.size() + j] != t.scores[j * t.labels.size() + i])
                throw std::invalid_argument("[relmap] score table is not symmetric");
    return t;
}

}  // namespace intra
