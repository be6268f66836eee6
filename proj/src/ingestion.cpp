#include "crseval/ingestion.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "crseval/error.hpp"
#include "crseval/json_io.hpp"
#include "crseval/rng.hpp"

namespace crseval {

namespace {

std::string context(const std::string& source, std::size_t line)
{
    return source + ":" + std::to_string(line) + ": ";
}

bool balanced_quotes(std::string_view text)
{
    return std::count(text.begin(), text.end(), '"') % 2 == 0;
}

std::string key_name(const CutKey& key)
{
    return "(" + key.dialog_id + ", " + std::to_string(key.cut_index) + ")";
}

// Runs one line's worth of decoding, translating failures into library errors
// that carry the file/line prefix.
template <typename Fn>
auto with_line_context(const std::string& where, Fn&& fn)
{
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), where + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ParseError, where + e.what());
    }
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    }
    return in;
}

} // namespace

const Dialog* DialogCorpus::find(std::string_view dialog_id) const
{
    auto it = std::find_if(dialogs.begin(), dialogs.end(),
                           [&](const Dialog& d) { return d.dialog_id == dialog_id; });
    return it == dialogs.end() ? nullptr : &*it;
}

const DialogSituation* SituationPool::find(std::string_view situation_id) const
{
    auto it = std::find_if(situations.begin(), situations.end(),
                           [&](const DialogSituation& s) { return s.situation_id == situation_id; });
    return it == situations.end() ? nullptr : &*it;
}

std::vector<ItemSpan> scan_item_markup(std::string_view text)
{
    std::vector<ItemSpan> spans;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = text.find('"', pos);
        if (open == std::string_view::npos) {
            break;
        }
        const std::size_t close = text.find('"', open + 1);
        if (close == std::string_view::npos) {
            throw Error(ErrorCode::UnbalancedQuotes,
                        "unbalanced double quote at offset " + std::to_string(open));
        }
        spans.push_back({open, close + 1, std::string(text.substr(open + 1, close - open - 1))});
        pos = close + 1;
    }
    return spans;
}

DialogCorpus parse_dialog_corpus(std::istream& in, const std::string& source_name)
{
    DialogCorpus corpus;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = context(source_name, line_no);
        Dialog dialog = with_line_context(where, [&] {
            const Json j = Json::parse(line);
            Dialog d;
            d.dialog_id = json_detail::required<std::string>(j, "dialog_id");
            const Json& utts = json_detail::required<Json>(j, "utterances");
            if (!utts.is_array()) {
                throw SchemaError("utterances", "expected an array");
            }
            int index = 0;
            for (const Json& u : utts) {
                Utterance utt;
                utt.speaker = speaker_from_string(json_detail::required<std::string>(u, "speaker"));
                utt.text = json_detail::required<std::string>(u, "text");
                utt.index = index++;
                if (utt.text.empty()) {
                    throw Error(ErrorCode::ParseError,
                                "utterance " + std::to_string(utt.index) + " has empty text");
                }
                if (!balanced_quotes(utt.text)) {
                    throw Error(ErrorCode::UnbalancedQuotes,
                                "utterance " + std::to_string(utt.index) +
                                    " has unbalanced double quotes");
                }
                d.utterances.push_back(std::move(utt));
            }
            return d;
        });
        if (dialog.utterances.empty()) {
            throw Error(ErrorCode::EmptyDialog,
                        where + "dialog '" + dialog.dialog_id + "' has no utterances");
        }
        if (std::none_of(dialog.utterances.begin(), dialog.utterances.end(),
                         [](const Utterance& u) { return u.speaker == Speaker::Seeker; })) {
            throw Error(ErrorCode::EmptyDialog,
                        where + "dialog '" + dialog.dialog_id + "' has no SEEKER utterance");
        }
        if (!seen.insert(dialog.dialog_id).second) {
            throw Error(ErrorCode::ParseError,
                        where + "duplicate dialog_id '" + dialog.dialog_id + "'");
        }
        corpus.dialogs.push_back(std::move(dialog));
    }
    return corpus;
}

DialogCorpus load_dialog_corpus(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return parse_dialog_corpus(in, path.string());
}

ResponseSet parse_response_set(std::istream& in, const std::string& source_name)
{
    ResponseSet set;
    std::optional<std::set<std::string>> systems;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = context(source_name, line_no);
        auto [key, responses] = with_line_context(where, [&] {
            const Json j = Json::parse(line);
            CutKey k{json_detail::required<std::string>(j, "dialog_id"),
                     json_detail::required<int>(j, "cut_index")};
            auto r = json_detail::required<std::map<std::string, std::string>>(j, "responses");
            return std::pair{std::move(k), std::move(r)};
        });
        std::set<std::string> ids;
        for (const auto& [id, text] : responses) ids.insert(id);
        if (!systems) {
            systems = ids;
        } else if (*systems != ids) {
            throw Error(ErrorCode::InvariantViolation,
                        where + "entry " + key_name(key) +
                            " covers a different set of systems than earlier entries");
        }
        if (!set.entries.emplace(key, std::move(responses)).second) {
            throw Error(ErrorCode::ParseError, where + "duplicate entry " + key_name(key));
        }
    }
    return set;
}

ResponseSet load_response_set(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return parse_response_set(in, path.string());
}

std::string situation_id_for(std::string_view dialog_id, int cut_index)
{
    std::string material(dialog_id);
    material.push_back('\0');
    material += std::to_string(cut_index);
    return to_hex(fnv1a64(material));
}

DialogSituation truncate_to_situation(const Dialog& dialog, int cut_index)
{
    if (cut_index < 0 || cut_index >= static_cast<int>(dialog.utterances.size())) {
        throw Error(ErrorCode::OutOfRange, "cut_index " + std::to_string(cut_index) +
                                               " outside dialog '" + dialog.dialog_id + "' of " +
                                               std::to_string(dialog.utterances.size()) +
                                               " utterances");
    }
    if (dialog.utterances[cut_index].speaker != Speaker::Seeker) {
        throw Error(ErrorCode::CutNotSeeker, "cut_index " + std::to_string(cut_index) +
                                                 " of dialog '" + dialog.dialog_id +
                                                 "' is not a SEEKER utterance");
    }
    DialogSituation situation;
    situation.situation_id = situation_id_for(dialog.dialog_id, cut_index);
    situation.source_dialog_id = dialog.dialog_id;
    situation.utterances.assign(dialog.utterances.begin(),
                                dialog.utterances.begin() + cut_index + 1);
    return situation;
}

std::vector<std::string> validate_situation(const DialogSituation& situation,
                                            std::optional<int> systems_per_situation)
{
    std::vector<std::string> out;
    const auto& utts = situation.utterances;
    if (utts.empty()) {
        out.push_back("utterances: must be non-empty");
    } else {
        if (utts.front().index != 0) {
            out.push_back("utterances[0].index: situation must start at the first utterance");
        }
        if (utts.back().speaker != Speaker::Seeker) {
            out.push_back("utterances: last utterance must be spoken by the SEEKER");
        }
    }
    for (std::size_t i = 0; i < utts.size(); ++i) {
        if (utts[i].index != static_cast<int>(i)) {
            out.push_back("utterances[" + std::to_string(i) + "].index: indices must be contiguous");
        }
        if (utts[i].text.empty() || !balanced_quotes(utts[i].text)) {
            out.push_back("utterances[" + std::to_string(i) +
                          "].text: must be non-empty with balanced double quotes");
        }
    }
    if (systems_per_situation &&
        static_cast<int>(situation.responses.size()) != *systems_per_situation) {
        out.push_back("responses: expected " + std::to_string(*systems_per_situation) +
                      " responses, got " + std::to_string(situation.responses.size()));
    }
    if (situation.responses.empty()) {
        out.push_back("responses: must be non-empty");
    }
    for (const auto& [system, text] : situation.responses) {
        if (text.empty() || !balanced_quotes(text)) {
            out.push_back("responses." + system +
                          ": must be non-empty with balanced double quotes");
        }
    }
    return out;
}

SituationPool build_situation_pool(const DialogCorpus& corpus, const ResponseSet& responses,
                                   std::uint64_t rng_seed, const PoolOptions& options)
{
    std::vector<const std::pair<const CutKey, std::map<std::string, std::string>>*> entries;
    entries.reserve(responses.entries.size());
    for (const auto& entry : responses.entries) entries.push_back(&entry);

    if (options.sample_size && *options.sample_size < entries.size()) {
        Rng rng(rng_seed);
        rng.shuffle(std::span(entries));
        entries.resize(*options.sample_size);
        std::sort(entries.begin(), entries.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });
    }

    std::optional<std::vector<std::string>> systems;
    SituationPool pool;
    pool.situations.reserve(entries.size());
    for (const auto* entry : entries) {
        const auto& [key, texts] = *entry;
        const Dialog* dialog = corpus.find(key.dialog_id);
        if (dialog == nullptr) {
            throw Error(ErrorCode::DanglingReference,
                        "response entry " + key_name(key) + " refers to an unknown dialog");
        }
        DialogSituation situation;
        try {
            situation = truncate_to_situation(*dialog, key.cut_index);
        } catch (const Error& e) {
            throw Error(e.code(), "response entry " + key_name(key) + ": " + e.what());
        }
        situation.responses = texts;

        auto ids = situation.system_ids();
        if (!systems) {
            systems = ids;
        } else if (*systems != ids) {
            throw Error(ErrorCode::InvariantViolation,
                        "situation " + situation.situation_id + " " + key_name(key) +
                            ": covers a different set of systems than other entries");
        }
        auto violations = validate_situation(situation, options.systems_per_situation);
        if (!violations.empty()) {
            throw Error(ErrorCode::InvariantViolation, "situation " + situation.situation_id +
                                                           " " + key_name(key) + ": " +
                                                           violations.front());
        }
        pool.situations.push_back(std::move(situation));
    }
    return pool;
}

std::string serialize_pool(const SituationPool& pool)
{
    return Json(pool.situations).dump(2) + "\n";
}

SituationPool parse_pool(std::string_view text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("pool file: ") + e.what());
    }
    if (!j.is_array()) {
        throw SchemaError("", "pool file must hold an array of situations");
    }
    SituationPool pool;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < j.size(); ++i) {
        DialogSituation s;
        try {
            s = j[i].get<DialogSituation>();
        } catch (SchemaError& e) {
            e.prepend("[" + std::to_string(i) + "]");
            throw;
        }
        if (!ids.insert(s.situation_id).second) {
            throw Error(ErrorCode::InvariantViolation,
                        "pool: duplicate situation_id '" + s.situation_id + "'");
        }
        auto violations = validate_situation(s);
        if (!violations.empty()) {
            throw Error(ErrorCode::InvariantViolation,
                        "pool: situation " + s.situation_id + ": " + violations.front());
        }
        pool.situations.push_back(std::move(s));
    }
    return pool;
}

void save_pool(const SituationPool& pool, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    }
    out << serialize_pool(pool);
    if (!out.flush()) {
        throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
    }
}

SituationPool load_pool(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_pool(buffer.str());
}

} // namespace crseval
