#pragma once

// Corpus and response-file loading, item-markup scanning and situation-pool
// construction.
//
// Corpus file: one JSON object per line,
//   {"dialog_id": "...", "utterances": [{"speaker": "SEEKER"|"RECOMMENDER", "text": "..."}]}
// Response file: one JSON object per line,
//   {"dialog_id": "...", "cut_index": 4, "responses": {"<system_id>": "..."}}
// Pool file: a JSON array of DialogSituation objects.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crseval/model.hpp"

namespace crseval {

struct Dialog {
    std::string dialog_id;
    std::vector<Utterance> utterances;

    friend bool operator==(const Dialog&, const Dialog&) = default;
};

struct DialogCorpus {
    std::vector<Dialog> dialogs;

    const Dialog* find(std::string_view dialog_id) const;
};

struct CutKey {
    std::string dialog_id;
    int cut_index = 0;

    friend auto operator<=>(const CutKey&, const CutKey&) = default;
};

struct ResponseSet {
    std::map<CutKey, std::map<std::string, std::string>> entries;
};

struct SituationPool {
    std::vector<DialogSituation> situations;

    const DialogSituation* find(std::string_view situation_id) const;
    std::size_t size() const { return situations.size(); }
};

/// Byte offsets into the scanned text: [start, end) covers the opening quote
/// through the closing quote; title is the text strictly between them.
struct ItemSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string title;

    friend bool operator==(const ItemSpan&, const ItemSpan&) = default;
};

std::vector<ItemSpan> scan_item_markup(std::string_view text);

DialogCorpus parse_dialog_corpus(std::istream& in, const std::string& source_name = "<stream>");
DialogCorpus load_dialog_corpus(const std::filesystem::path& path);

ResponseSet parse_response_set(std::istream& in, const std::string& source_name = "<stream>");
ResponseSet load_response_set(const std::filesystem::path& path);

/// Stable id for a (dialog, cut) pair: hex FNV-1a of "<dialog_id>\0<cut_index>".
std::string situation_id_for(std::string_view dialog_id, int cut_index);

/// Prefix utterances[0..=cut_index] as a situation with no responses attached.
DialogSituation truncate_to_situation(const Dialog& dialog, int cut_index);

struct PoolOptions {
    /// When set, every situation must carry exactly this many responses.
    std::optional<int> systems_per_situation;
    /// When set and smaller than the number of entries, keep a uniform random
    /// subset of this size (chosen with the pool seed).
    std::optional<std::size_t> sample_size;
};

/// One situation per response entry, in sorted key order.
SituationPool build_situation_pool(const DialogCorpus& corpus, const ResponseSet& responses,
                                   std::uint64_t rng_seed, const PoolOptions& options = {});

/// Violations of the DialogSituation invariants (empty when valid).
std::vector<std::string> validate_situation(const DialogSituation& situation,
                                            std::optional<int> systems_per_situation = std::nullopt);

std::string serialize_pool(const SituationPool& pool);
SituationPool parse_pool(std::string_view text);
void save_pool(const SituationPool& pool, const std::filesystem::path& path);
SituationPool load_pool(const std::filesystem::path& path);

} // namespace crseval
