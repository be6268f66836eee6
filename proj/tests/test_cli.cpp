#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "crseval/analysis.hpp"
#include "crseval/export.hpp"
#include "crseval/service.hpp"
#include "crseval/store.hpp"
#include "process.hpp"
#include "test_support.hpp"
#include "wire_client.hpp"

using namespace crseval;
using testing::run_command;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CRSEVAL_TEST_DATA_DIR;
const std::string kServer = CRSEVAL_SERVER_BIN;
const std::string kPoolTool = CRSEVAL_POOL_BIN;
const std::string kAnalyze = CRSEVAL_ANALYZE_BIN;

class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("crseval_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string read_file(const std::string& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text)
{
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// 20 sessions, workers 3, 10 and 17 fail the attention check.
ExportDocument sample_export()
{
    const Study study = default_study();
    const auto pool = testing::synthetic_pool(25);
    MemoryStore store;
    store.put_study(study);
    store.put_pool(study.study_id, pool);
    for (int i = 0; i < 20; ++i) {
        testing::DriveOptions opt;
        opt.pass_attention = i % 7 != 3;
        store.put_record(testing::drive_record(
            study, pool, "w" + std::to_string(i), static_cast<std::uint64_t>(i),
            [i](int k, const std::string& s) { return 1 + (i * 3 + k + s.back()) % 5; }, opt));
    }
    return export_document(store, study.study_id);
}

void write_export(const ExportDocument& doc, const std::string& path)
{
    std::ofstream(path) << build_export(doc).dump(2);
}

} // namespace

TEST_CASE("crseval-pool")
{
    TempDir dir;
    auto r = run_command({kPoolTool, "--corpus", (kData / "corpus10.jsonl").string(), "--responses",
                          (kData / "responses12.jsonl").string(), "--output", dir.file("pool.json"), "--systems", "3"});
    INFO(r.output);
    CHECK(r.exit_code == 0);
    CHECK(load_pool(dir.file("pool.json")).size() == 12);

    r = run_command({kPoolTool, "--corpus", (kData / "corpus10.jsonl").string(), "--responses",
                     (kData / "responses12.jsonl").string(), "--output", dir.file("five.json"), "--sample", "5",
                     "--seed", "3"});
    CHECK(r.exit_code == 0);
    CHECK(load_pool(dir.file("five.json")).size() == 5);

    r = run_command({kPoolTool, "--corpus", dir.file("absent.jsonl"), "--responses",
                     (kData / "responses12.jsonl").string(), "--output", dir.file("x.json")});
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error [") != std::string::npos);

    r = run_command({kPoolTool, "--corpus", (kData / "corpus10.jsonl").string()});
    CHECK(r.exit_code != 0);
}

TEST_CASE("crseval-server default-study")
{
    TempDir dir;
    const auto r = run_command({kServer, "default-study", "--output", dir.file("study.json")});
    CHECK(r.exit_code == 0);
    CHECK(load_study(dir.file("study.json")) == default_study());
    CHECK(run_command({kServer}).exit_code != 0);
}

TEST_CASE("crseval-server serve, stop, export")
{
    TempDir dir;
    const auto study = default_study();
    save_pool(testing::synthetic_pool(20), dir.file("pool.json"));

    testing::ChildProcess server({kServer, "serve", "--port", "0", "--pool", dir.file("pool.json"), "--store",
                                  dir.file("store.log")});
    const int port = testing::port_from_banner(server.read_line());
    REQUIRE(port > 0);

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    for (int i = 0; i < 2; ++i) {
        testing::Participant p;
        p.worker_id = "cli-" + std::to_string(i);
        p.answers = testing::default_wire_answers(study);
        const auto w = testing::walk(testing::http_post(client), p);
        CHECK(w.failed_status == 0);
    }
    server.kill(SIGTERM);
    CHECK(server.wait() == 0);

    const auto r = run_command({kServer, "export", "--store", dir.file("store.log"), "--study-id", "default",
                                "--output", dir.file("export.json")});
    CHECK(r.exit_code == 0);
    const auto doc = load_export(dir.file("export.json"));
    CHECK(doc.records.size() == 2);

    CHECK(run_command({kServer, "export", "--store", dir.file("store.log"), "--study-id", "nope"}).exit_code == 2);
}

TEST_CASE("crseval-server rejects a missing pool")
{
    TempDir dir;
    const auto r = run_command({kServer, "serve", "--port", "0", "--store", dir.file("s.log")});
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("pool") != std::string::npos);
}

TEST_CASE("crseval-analyze")
{
    TempDir dir;
    const auto doc = sample_export();
    write_export(doc, dir.file("export.json"));
    const auto kept = filtered_records(doc, {});
    REQUIRE(kept.size() == 17);

    SUBCASE("summarize")
    {
        const auto r = run_command({kAnalyze, "summarize", "--input", dir.file("export.json"), "--output-dir",
                                    dir.file("out")});
        INFO(r.output);
        REQUIRE(r.exit_code == 0);
        const Json j = Json::parse(read_file(dir.file("out/summary.json")));
        CHECK(j["workers"]["kept"] == 17);
        CHECK(j["workers"]["discarded"] == 3);
        const auto expected = system_rating_summary(kept, doc.study.scale);
        CHECK(j["systems"]["sys_a"]["n"] == expected.at("sys_a").n);

        const auto stdout_run = run_command({kAnalyze, "summarize", "--input", dir.file("export.json")});
        CHECK(Json::parse(stdout_run.output) == j);
    }
    SUBCASE("icc")
    {
        const auto r = run_command({kAnalyze, "icc", "--input", dir.file("export.json")});
        REQUIRE(r.exit_code == 0);
        CHECK(std::abs(std::stod(r.output) - icc_oneway(rating_matrix(kept))) < 1e-12);
    }
    SUBCASE("filter")
    {
        const auto r = run_command({kAnalyze, "filter", "--input", dir.file("export.json"), "--output-dir",
                                    dir.file("out")});
        REQUIRE(r.exit_code == 0);
        const auto filtered = load_export(dir.file("out/filtered_export.json"));
        CHECK(filtered.records.size() == 17);
        for (const auto& rec : filtered.records) CHECK_FALSE(rec.reliability.discarded);

        const auto all = run_command({kAnalyze, "filter", "--input", dir.file("export.json"), "--include-discarded"});
        CHECK(parse_export_text(all.output).records.size() == 20);
    }
    SUBCASE("csv")
    {
        const auto r = run_command({kAnalyze, "csv", "--input", dir.file("export.json"), "--output-dir",
                                    dir.file("out")});
        REQUIRE(r.exit_code == 0);
        CHECK(count_lines(read_file(dir.file("out/ratings.csv"))) == 17 * 29 + 1);
        CHECK(count_lines(read_file(dir.file("out/system_summary.csv"))) == 4);
        CHECK(fs::exists(dir.file("out/questionnaire.csv")));
        CHECK(run_command({kAnalyze, "csv", "--input", dir.file("export.json")}).exit_code != 0);
    }
    SUBCASE("thresholds re-flag records")
    {
        std::ofstream(dir.file("t.json")) << R"({"min_event_ms": 100000, "min_task_ms": 0, "min_total_ms": 0, "max_total_ms": 99999999})";
        const auto r = run_command({kAnalyze, "summarize", "--input", dir.file("export.json"), "--thresholds",
                                    dir.file("t.json")});
        REQUIRE(r.exit_code == 0);
        CHECK(Json::parse(r.output)["workers"]["flagged"] == 20);
    }
    SUBCASE("bad inputs")
    {
        Json j = build_export(doc);
        j["format_version"] = 7;
        std::ofstream(dir.file("v7.json")) << j.dump();
        auto r = run_command({kAnalyze, "summarize", "--input", dir.file("v7.json")});
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("version-mismatch") != std::string::npos);

        j = build_export(doc);
        j["records"][4]["tasks"][2].erase("ratings");
        std::ofstream(dir.file("broken.json")) << j.dump();
        r = run_command({kAnalyze, "summarize", "--input", dir.file("broken.json")});
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("records[4].tasks[2].ratings") != std::string::npos);

        CHECK(run_command({kAnalyze, "summarize", "--input", dir.file("absent.json")}).exit_code == 2);
    }
    SUBCASE("undefined icc")
    {
        ExportDocument flat = doc;
        for (auto& rec : flat.records) {
            for (auto& t : rec.tasks) {
                for (auto& [s, v] : t.ratings) v = 3;
            }
        }
        write_export(flat, dir.file("flat.json"));
        const auto r = run_command({kAnalyze, "icc", "--input", dir.file("flat.json")});
        CHECK(r.exit_code == 3);
        CHECK(r.output.find("degenerate-data") != std::string::npos);
    }
}
