#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "intra/rng.hpp"

namespace intra {

/// Per-label synonym lists for conditioning-text augmentation. Synonyms never
/// collide with other vocabulary labels; the contrastive class label always
/// stays the original.
struct SynonymTable {
    std::map<std::string, std::vector<std::string>> entries;
    int k_s = 3;
    double substitute_prob = 0.2;

    /// Asserts the dedup postcondition against a vocabulary.
    void validate_against(const std::vector<std::string>& vocabulary) const;
};

/// Numbered query in the fixed format: one "'<label>' in context of
/// '<label> <object>'" line per label, requesting bracketed triples.
/// Throws on an empty label list or a label without context.
std::string build_synonym_prompt(const std::vector<std::string>& labels,
                                 const std::map<std::string, std::string>& contexts);

/// Parses one bracketed list per queried label (numbered response lines) and
/// drops any synonym equal (case-insensitive, trimmed) to a different
/// vocabulary label, plus duplicates within an entry. An unparsable line
/// yields an empty list and a warning on stderr.
std::map<std::string, std::vector<std::string>> parse_and_dedupe(const std::string& response,
                                                                 const std::vector<std::string>& queried_labels,
                                                                 const std::vector<std::string>& vocabulary);

/// With probability table.substitute_prob returns a uniformly chosen synonym,
/// otherwise the original label. Labels without synonyms always map to
/// themselves. Conditioning text only; loss labels flow separately.
std::string sample_condition_text(const std::string& label, const SynonymTable& table, Rng& rng);

void save_synonyms(const std::filesystem::path& path, const SynonymTable& table);
SynonymTable load_synonyms(const std::filesystem::path& path);

}  // namespace intra
