#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace intra {

enum class Verdict { positive, negative, unparsed };

enum class RelmapProvenance { llm, wordnet, word2vec, cooccurrence, manual };

std::string to_string(RelmapProvenance p);
RelmapProvenance relmap_provenance_from_string(const std::string& s);

/// Symmetric binary relationship matrix over an ordered interaction vocabulary.
/// Diagonal is always 1 (a class is its own positive).
struct RelationshipMap {
    std::vector<std::string> labels;
    std::vector<uint8_t> matrix;  // row-major |labels|^2, entries 0/1
    RelmapProvenance provenance = RelmapProvenance::manual;
    std::optional<double> threshold;  // similarity baselines only

    size_t size() const { return labels.size(); }
    uint8_t at(size_t i, size_t j) const { return matrix[i * labels.size() + j]; }
    void set(size_t i, size_t j, uint8_t v) { matrix[i * labels.size() + j] = v; }

    /// Index of a label; throws if absent.
    size_t index_of(const std::string& label) const;
    bool contains(const std::string& label) const;

    /// Symmetry, binary entries, unit diagonal, square shape.
    void validate() const;

    static RelationshipMap identity(std::vector<std::string> labels, RelmapProvenance prov = RelmapProvenance::manual);
};

void save_map(const std::filesystem::path& path, const RelationshipMap& map);
RelationshipMap load_map(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// LLM chain-of-thought route
// ---------------------------------------------------------------------------

struct PairTranscript {
    std::string a, b;  // sorted, a < b
    std::string prompt;
    std::string response;
    Verdict verdict = Verdict::unparsed;
};

/// Three-step CoT query for one unordered pair: four fixed few-shot examples
/// (hold/carry +, hit/carry +, cut with/hold -, sip/hold -), the
/// objects -> parts -> same-part reasoning instruction, and the short-format
/// answer request. Deterministic. Throws for a == b; the diagonal is never queried.
std::string build_pair_prompt(const std::string& a, const std::string& b);

/// Scans the answer region (text after the last "final answer" marker, else the
/// response tail) for a case-insensitive positive/negative token. Both or
/// neither present -> unparsed.
Verdict parse_verdict(const std::string& response);

/// Directory-backed transcript store, one JSON file per pair, keyed by the
/// sorted pair plus a prompt hash so prompt edits invalidate stale verdicts.
/// Safe for concurrent insertion of distinct keys.
class TranscriptCache {
  public:
    explicit TranscriptCache(std::filesystem::path dir);

    std::optional<PairTranscript> find(const std::string& a, const std::string& b, const std::string& prompt) const;
    void store(const PairTranscript& t);

    /// Number of find() calls since construction (pair lookups).
    size_t lookups() const { return lookups_; }

    const std::filesystem::path& dir() const { return dir_; }

    static std::string file_key(const std::string& a, const std::string& b, const std::string& prompt);

  private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    mutable size_t lookups_ = 0;
};

/// Returns the raw completion text for a prompt. Throwing signals a transport
/// failure; build_map_llm retries once and then aborts naming the pair.
using PairOracle = std::function<std::string(const std::string& prompt)>;

struct LlmBuildStats {
    size_t pair_lookups = 0;
    size_t live_calls = 0;
    size_t defaulted_negative = 0;  // unparsed after retry
};

/// Queries every unordered pair once (cache-first), symmetrizes, sets the
/// diagonal to 1 and records all transcripts. An unparsed verdict is retried
/// once against the oracle, then defaults to negative with a warning.
RelationshipMap build_map_llm(const std::vector<std::string>& labels, const PairOracle& oracle,
                              TranscriptCache& cache, LlmBuildStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Similarity-score baselines (WordNet Wu-Palmer / Word2Vec cosine / GloVe
// co-occurrence all plug in behind the same score signature)
// ---------------------------------------------------------------------------

using PairScore = std::function<double(const std::string& a, const std::string& b)>;

/// Entry = 1 iff score >= threshold; diagonal 1. Scores must be symmetric and
/// inside [0, 1].
RelationshipMap build_map_similarity(const std::vector<std::string>& labels, const PairScore& scores,
                                     double threshold = 0.5,
                                     RelmapProvenance provenance = RelmapProvenance::manual);

/// Precomputed symmetric score table loaded from JSON {labels, scores}.
struct ScoreTable {
    std::vector<std::string> labels;
    std::vector<double> scores;  // row-major

    double at(const std::string& a, const std::string& b) const;
    PairScore as_fn() const;
};

ScoreTable load_score_table(const std::filesystem::path& path);

}  // namespace intra
