#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "crseval/error.hpp"
#include "crseval/ingestion.hpp"
#include "crseval/json_io.hpp"
#include "test_support.hpp"

using namespace crseval;

namespace {

const std::filesystem::path kData = CRSEVAL_TEST_DATA_DIR;

ErrorCode error_code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

DialogCorpus corpus_from(const std::string& text)
{
    std::istringstream in(text);
    return parse_dialog_corpus(in);
}

Dialog dialog_of(std::initializer_list<Speaker> speakers)
{
    Dialog d{"dlg", {}};
    int i = 0;
    for (auto s : speakers) d.utterances.push_back({s, "turn " + std::to_string(i), i++});
    return d;
}

// Independent oracle: every maximal "..." segment, via std::regex.
std::vector<std::string> regex_titles(const std::string& text)
{
    std::vector<std::string> out;
    static const std::regex quoted("\"([^\"]*)\"");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), quoted); it != std::sregex_iterator(); ++it) {
        out.push_back((*it)[1]);
    }
    return out;
}

} // namespace

TEST_CASE("load_dialog_corpus: minimal well-formed input")
{
    const auto corpus = corpus_from(
        R"({"dialog_id": "x", "utterances": [{"speaker": "SEEKER", "text": "hi"}, {"speaker": "RECOMMENDER", "text": "hello"}]})"
        "\n");
    REQUIRE(corpus.dialogs.size() == 1);
    const auto& u = corpus.dialogs[0].utterances;
    REQUIRE(u.size() == 2);
    CHECK(u[0].speaker == Speaker::Seeker);
    CHECK(u[1].speaker == Speaker::Recommender);
    CHECK(u[0].index == 0);
    CHECK(u[1].index == 1);
}

TEST_CASE("load_dialog_corpus: error classes")
{
    CHECK(error_code_of([] {
              corpus_from(R"({"dialog_id": "x", "utterances": [{"speaker": "RECOMMENDER", "text": "hello"}]})");
          }) == ErrorCode::EmptyDialog);
    CHECK(error_code_of([] { corpus_from(R"({"dialog_id": "x", "utterances": []})"); }) == ErrorCode::EmptyDialog);
    CHECK(error_code_of([] {
              corpus_from(R"({"dialog_id": "x", "utterances": [{"speaker": "BOT", "text": "hello"}]})");
          }) == ErrorCode::UnknownSpeaker);
    CHECK(error_code_of([] { corpus_from("{not json}\n"); }) == ErrorCode::ParseError);

    try {
        corpus_from("\n"
                    R"({"dialog_id": "a", "utterances": [{"speaker": "SEEKER", "text": "ok"}]})"
                    "\n"
                    R"({"dialog_id": "b", "utterances": [{"speaker": "SEEKER"}]})");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
        CHECK(std::string(e.what()).find("text") != std::string::npos);
    }
}

TEST_CASE("load_dialog_corpus: 10-dialog fixture matches a line-scanning count")
{
    const auto corpus = load_dialog_corpus(kData / "corpus10.jsonl");
    // Frozen from an independent scan counting "speaker" keys per line.
    const std::vector<std::size_t> expected{7, 3, 4, 5, 5, 4, 9, 5, 8, 4};
    REQUIRE(corpus.dialogs.size() == 10);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(corpus.dialogs[i].utterances.size() == expected[i]);
        CHECK(corpus.dialogs[i].dialog_id == "d0" + std::to_string(i));
    }
}

TEST_CASE("scan_item_markup")
{
    auto spans = scan_item_markup(R"x(Have you seen "The Matrix (1999)"?)x");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].title == "The Matrix (1999)");
    CHECK(spans[0].start == 14);
    CHECK(spans[0].end == 33);

    CHECK(scan_item_markup("I like comedies").empty());

    const std::string two = R"(I saw "Up" and "Coco" twice)";
    spans = scan_item_markup(two);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].title == "Up");
    CHECK(spans[1].title == "Coco");
    CHECK(regex_titles(two) == std::vector<std::string>{"Up", "Coco"});

    CHECK(error_code_of([] { scan_item_markup(R"(a "dangling quote)"); }) == ErrorCode::UnbalancedQuotes);
    CHECK(scan_item_markup(R"("")").size() == 1);
}

TEST_CASE("scan_item_markup spans re-splice to the original text (property)")
{
    Rng rng(17);
    const char alphabet[] = "ab \"\"xyz(1)";
    for (int trial = 0; trial < 2000; ++trial) {
        std::string text;
        const auto len = rng.uniform(40);
        for (std::uint64_t i = 0; i < len; ++i) text.push_back(alphabet[rng.uniform(sizeof alphabet - 1)]);
        if (std::count(text.begin(), text.end(), '"') % 2 == 1) text.push_back('"');

        const auto spans = scan_item_markup(text);
        std::vector<std::string> titles;
        std::string rebuilt;
        std::size_t cursor = 0;
        for (const auto& s : spans) {
            REQUIRE(s.start >= cursor);
            rebuilt += text.substr(cursor, s.start - cursor);
            rebuilt += "\"" + s.title + "\"";
            cursor = s.end;
            titles.push_back(s.title);
        }
        rebuilt += text.substr(cursor);
        CHECK(rebuilt == text);
        CHECK(titles == regex_titles(text));
    }
}

TEST_CASE("truncate_to_situation")
{
    using S = Speaker;
    auto one = truncate_to_situation(dialog_of({S::Seeker}), 0);
    CHECK(one.utterances.size() == 1);
    CHECK(one.responses.empty());

    const auto d = dialog_of({S::Seeker, S::Recommender, S::Seeker});
    CHECK(error_code_of([&] { truncate_to_situation(d, 1); }) == ErrorCode::CutNotSeeker);
    CHECK(error_code_of([&] { truncate_to_situation(d, 3); }) == ErrorCode::OutOfRange);
    CHECK(error_code_of([&] { truncate_to_situation(d, -1); }) == ErrorCode::OutOfRange);

    const auto s = truncate_to_situation(d, 2);
    // Slicing oracle.
    const std::vector<Utterance> prefix(d.utterances.begin(), d.utterances.begin() + 3);
    CHECK(s.utterances == prefix);
    CHECK(s.utterances.back().speaker == S::Seeker);
    CHECK(s.situation_id == situation_id_for("dlg", 2));
    CHECK(s.situation_id.size() == 16);
    CHECK(truncate_to_situation(d, 2).situation_id == s.situation_id);
    CHECK(truncate_to_situation(d, 0).situation_id != s.situation_id);
}

TEST_CASE("build_situation_pool: minimal and error cases")
{
    using S = Speaker;
    DialogCorpus corpus;
    corpus.dialogs.push_back(dialog_of({S::Seeker, S::Recommender}));
    ResponseSet responses;
    responses.entries[{"dlg", 0}] = {{"a", "one"}, {"b", "two"}, {"c", "three"}};

    auto pool = build_situation_pool(corpus, responses, 0, {3, std::nullopt});
    REQUIRE(pool.size() == 1);
    CHECK(pool.situations[0].responses.size() == 3);

    ResponseSet bad;
    bad.entries[{"dlg", 1}] = {{"a", "one"}};
    try {
        build_situation_pool(corpus, bad, 0);
        FAIL("expected cut-not-seeker");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CutNotSeeker);
        CHECK(std::string(e.what()).find("(dlg, 1)") != std::string::npos);
    }

    ResponseSet dangling;
    dangling.entries[{"nope", 0}] = {{"a", "one"}};
    CHECK(error_code_of([&] { build_situation_pool(corpus, dangling, 0); }) == ErrorCode::DanglingReference);

    ResponseSet wrong_count;
    wrong_count.entries[{"dlg", 0}] = {{"a", "one"}};
    CHECK(error_code_of([&] { build_situation_pool(corpus, wrong_count, 0, {3, std::nullopt}); }) ==
          ErrorCode::InvariantViolation);

    ResponseSet unbalanced;
    unbalanced.entries[{"dlg", 0}] = {{"a", "say \"hi"}};
    CHECK(error_code_of([&] { build_situation_pool(corpus, unbalanced, 0); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("response files must cover one system set")
{
    std::istringstream in(R"({"dialog_id": "a", "cut_index": 0, "responses": {"x": "1", "y": "2"}})"
                          "\n"
                          R"({"dialog_id": "b", "cut_index": 0, "responses": {"x": "1", "z": "2"}})");
    CHECK(error_code_of([&] { parse_response_set(in); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("build_situation_pool: 12-entry fixture, validated independently from the pool file")
{
    const auto corpus = load_dialog_corpus(kData / "corpus10.jsonl");
    const auto responses = load_response_set(kData / "responses12.jsonl");
    const auto pool = build_situation_pool(corpus, responses, 0, {3, std::nullopt});
    REQUIRE(pool.size() == 12);

    // Validate the emitted pool file directly as JSON, without the library's types.
    const Json doc = Json::parse(serialize_pool(pool));
    REQUIRE(doc.size() == 12);
    std::set<std::string> ids;
    std::set<std::string> dialogs;
    for (const auto& s : doc) {
        const auto& utts = s["utterances"];
        CHECK(utts.front()["index"] == 0);
        CHECK(utts.back()["speaker"] == "SEEKER");
        CHECK(s["responses"].size() == 3);
        ids.insert(s["situation_id"].get<std::string>());
        dialogs.insert(s["source_dialog_id"].get<std::string>());
    }
    CHECK(ids.size() == 12);
    CHECK(dialogs.size() == 5);

    // Sorted key order: dialog id, then cut index.
    std::vector<std::pair<std::string, std::size_t>> keys;
    for (const auto& s : doc) keys.emplace_back(s["source_dialog_id"], s["utterances"].size() - 1);
    CHECK(std::is_sorted(keys.begin(), keys.end()));
}

TEST_CASE("build_situation_pool is a pure function of its inputs")
{
    const auto corpus = load_dialog_corpus(kData / "corpus10.jsonl");
    const auto responses = load_response_set(kData / "responses12.jsonl");
    CHECK(serialize_pool(build_situation_pool(corpus, responses, 5)) ==
          serialize_pool(build_situation_pool(corpus, responses, 5)));

    PoolOptions sampled{3, 7};
    const auto a = build_situation_pool(corpus, responses, 5, sampled);
    const auto b = build_situation_pool(corpus, responses, 5, sampled);
    CHECK(a.size() == 7);
    CHECK(serialize_pool(a) == serialize_pool(b));
    bool differs = false;
    for (std::uint64_t seed = 6; seed < 20 && !differs; ++seed) {
        differs = serialize_pool(build_situation_pool(corpus, responses, seed, sampled)) != serialize_pool(a);
    }
    CHECK(differs);
}

TEST_CASE("pool file round trip and validation")
{
    const auto pool = testing::synthetic_pool(20);
    const auto path = std::filesystem::temp_directory_path() / "crseval_pool_test.json";
    save_pool(pool, path);
    const auto loaded = load_pool(path);
    CHECK(loaded.situations == pool.situations);
    std::filesystem::remove(path);

    Json doc = Json::parse(serialize_pool(pool));
    doc[1]["situation_id"] = doc[0]["situation_id"];
    CHECK(error_code_of([&] { parse_pool(doc.dump()); }) == ErrorCode::InvariantViolation);

    doc = Json::parse(serialize_pool(pool));
    doc[0]["utterances"].push_back({{"speaker", "RECOMMENDER"}, {"text", "x"}, {"index", 99}});
    CHECK(error_code_of([&] { parse_pool(doc.dump()); }) == ErrorCode::InvariantViolation);

    doc = Json::parse(serialize_pool(pool));
    doc[4].erase("responses");
    try {
        parse_pool(doc.dump());
        FAIL("expected schema violation");
    } catch (const SchemaError& e) {
        CHECK(e.path() == "[4].responses");
    }
}
