#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "crseval/error.hpp"
#include "crseval/store.hpp"
#include "test_support.hpp"

using namespace crseval;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("crseval_store_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path file(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

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

struct Fixture {
    Study study = default_study();
    SituationPool pool = testing::synthetic_pool(12);

    SessionRecord record(int i, bool pass = true) const
    {
        testing::DriveOptions opt;
        opt.pass_attention = pass;
        return testing::drive_record(study, pool, "worker-" + std::to_string(i), 1000 + i,
                                     [i](int k, const std::string&) { return 1 + (i + k) % 5; }, opt);
    }
};

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

std::size_t line_count(const fs::path& p)
{
    const auto text = read_file(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("log lines carry a crc32 of the payload")
{
    // Standard CRC-32 check value.
    CHECK(frame_log_line("123456789") == "cbf43926 123456789\n");
}

TEST_CASE_TEMPLATE("store contract", StoreT, MemoryStore, FileStore)
{
    TempDir dir;
    Fixture fx;
    std::unique_ptr<DocumentStore> store;
    if constexpr (std::is_same_v<StoreT, FileStore>) {
        store = std::make_unique<FileStore>(dir.file("store.log"));
    } else {
        store = std::make_unique<MemoryStore>();
    }

    CHECK(error_code_of([&] { store->put_record(fx.record(0)); }) == ErrorCode::UnknownStudy);
    store->put_study(fx.study);
    store->put_pool(fx.study.study_id, fx.pool);
    CHECK(store->get_study(fx.study.study_id) == fx.study);
    CHECK(store->get_pool(fx.study.study_id)->situations == fx.pool.situations);
    CHECK_FALSE(store->get_study("nope"));

    SUBCASE("round trip")
    {
        const auto r = fx.record(0);
        const auto id = store->put_record(r);
        CHECK(store->get_record(id) == r);
        CHECK(store->has_completed(fx.study.study_id, r.worker_id));
        CHECK_FALSE(store->has_completed(fx.study.study_id, "someone-else"));
        CHECK(error_code_of([&] { (void)store->get_record(id + 1); }) == ErrorCode::UnknownRecord);
    }
    SUBCASE("duplicate session")
    {
        const auto r = fx.record(0);
        store->put_record(r);
        CHECK(error_code_of([&] { store->put_record(r); }) == ErrorCode::DuplicateSession);
        CHECK(store->record_count() == 1);
    }
    SUBCASE("hit code collision within a study")
    {
        const auto a = fx.record(0);
        auto b = fx.record(1);
        b.hit_code = a.hit_code;
        store->put_record(a);
        CHECK(error_code_of([&] { store->put_record(b); }) == ErrorCode::HitCodeCollision);
        b.hit_code = session_hit_code(b.session_seed, 1);
        CHECK_NOTHROW(store->put_record(b));
    }
    SUBCASE("invalid record")
    {
        auto r = fx.record(0);
        r.tasks[0].ratings.begin()->second = 7;
        CHECK(error_code_of([&] { store->put_record(r); }) == ErrorCode::InvariantViolation);
        CHECK(store->record_count() == 0);
    }
    SUBCASE("1,000 sequential puts")
    {
        auto base = fx.record(0);
        std::map<RecordId, SessionRecord> expected;
        for (int i = 0; i < 1000; ++i) {
            SessionRecord r = base;
            r.session_id = "session-" + std::to_string(i);
            r.worker_id = "w" + std::to_string(i);
            r.hit_code = session_hit_code(static_cast<std::uint64_t>(i), 0);
            const auto id = store->put_record(r);
            CHECK(expected.emplace(id, r).second);
        }
        CHECK(expected.size() == 1000);
        CHECK(store->record_count() == 1000);
        for (const auto& [id, r] : expected) CHECK(store->get_record(id) == r);
        const auto listed = store->list_records(fx.study.study_id);
        REQUIRE(listed.size() == 1000);
        for (std::size_t i = 0; i < listed.size(); ++i) CHECK(listed[i].second.session_id == "session-" + std::to_string(i));
    }
}

TEST_CASE("FileStore survives reopen")
{
    TempDir dir;
    Fixture fx;
    const auto path = dir.file("store.log");
    std::vector<std::pair<RecordId, SessionRecord>> written;
    {
        FileStore store(path);
        store.put_study(fx.study);
        store.put_pool(fx.study.study_id, fx.pool);
        for (int i = 0; i < 5; ++i) {
            const auto r = fx.record(i, i != 2);
            written.emplace_back(store.put_record(r), r);
        }
    }
    FileStore reopened(path);
    CHECK(reopened.get_study(fx.study.study_id) == fx.study);
    CHECK(reopened.list_records(fx.study.study_id) == written);
    // Ids keep counting after a restart.
    CHECK(reopened.put_record(fx.record(9)) == 6);
}

TEST_CASE("FileStore drops a torn final line")
{
    TempDir dir;
    Fixture fx;
    const auto path = dir.file("store.log");
    {
        FileStore store(path);
        store.put_study(fx.study);
        store.put_record(fx.record(0));
    }
    const auto intact = read_file(path);
    const std::string partial = frame_log_line(Json(fx.record(1)).dump());

    SUBCASE("no trailing newline")
    {
        write_file(path, intact + partial.substr(0, partial.size() / 2));
    }
    SUBCASE("newline but bad checksum")
    {
        write_file(path, intact + "00000000 {\"kind\":\"rec\n");
    }

    FileStore store(path);
    CHECK(store.record_count() == 1);
    CHECK(read_file(path) == intact);
    CHECK_NOTHROW(store.put_record(fx.record(1)));
    CHECK(store.record_count() == 2);
}

TEST_CASE("FileStore refuses damage before the tail")
{
    TempDir dir;
    Fixture fx;
    const auto path = dir.file("store.log");
    {
        FileStore store(path);
        store.put_study(fx.study);
        store.put_record(fx.record(0));
        store.put_record(fx.record(1));
    }
    auto text = read_file(path);
    const auto second_line = text.find('\n') + 1;
    text[second_line + 20] = text[second_line + 20] == 'x' ? 'y' : 'x';
    write_file(path, text);
    CHECK(error_code_of([&] { FileStore reopened(path); }) == ErrorCode::StorageCorrupt);
}

TEST_CASE("FileStore compaction keeps only live entries")
{
    TempDir dir;
    Fixture fx;
    const auto path = dir.file("store.log");
    {
        FileStore store(path, 1000);
        for (int i = 0; i < 10; ++i) {
            Study s = fx.study;
            s.instructions_text = "revision " + std::to_string(i);
            store.put_study(s);
        }
        store.put_record(fx.record(0));
        CHECK(line_count(path) == 11);
        store.compact();
        CHECK(line_count(path) == 2);
        CHECK(store.get_study(fx.study.study_id)->instructions_text == "revision 9");
        store.put_record(fx.record(1));
        CHECK(line_count(path) == 3);
    }
    FileStore reopened(path);
    CHECK(reopened.record_count() == 2);
    CHECK(reopened.get_study(fx.study.study_id)->instructions_text == "revision 9");

    // Identical re-puts are not new entries.
    reopened.put_study(*reopened.get_study(fx.study.study_id));
    CHECK(line_count(path) == 3);

    // Threshold-triggered compaction.
    FileStore small(dir.file("small.log"), 3);
    for (int i = 0; i < 4; ++i) {
        Study s = fx.study;
        s.instructions_text = std::to_string(i);
        small.put_study(s);
    }
    CHECK(line_count(dir.file("small.log")) == 1);
    CHECK_FALSE(fs::exists(dir.file("small.log.compact")));
}

TEST_CASE("concurrent puts serialize")
{
    TempDir dir;
    Fixture fx;
    FileStore store(dir.file("store.log"));
    store.put_study(fx.study);
    const auto base = fx.record(0);

    constexpr int kThreads = 8;
    constexpr int kPerThread = 25;
    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    std::vector<std::vector<RecordId>> ids(kThreads);
    for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < kPerThread; ++i) {
                SessionRecord r = base;
                r.session_id = "t" + std::to_string(t) + "-" + std::to_string(i);
                r.worker_id = r.session_id;
                r.hit_code = session_hit_code(static_cast<std::uint64_t>(t * 1000 + i), 0);
                try {
                    ids[t].push_back(store.put_record(r));
                } catch (...) {
                    ++failures;
                }
                // Readers run alongside writers.
                (void)store.list_records(fx.study.study_id);
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(failures == 0);
    std::set<RecordId> all;
    for (const auto& v : ids) all.insert(v.begin(), v.end());
    CHECK(all.size() == kThreads * kPerThread);

    FileStore reopened(dir.file("store.log"));
    CHECK(reopened.record_count() == kThreads * kPerThread);
}

TEST_CASE("concurrent duplicate session: exactly one wins")
{
    Fixture fx;
    MemoryStore store;
    store.put_study(fx.study);
    const auto r = fx.record(0);
    std::atomic<int> ok{0}, dup{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            try {
                store.put_record(r);
                ++ok;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::DuplicateSession) ++dup;
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(ok == 1);
    CHECK(dup == 7);
}
