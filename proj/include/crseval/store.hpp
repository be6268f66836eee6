#pragma once

// Document store for studies, situation pools and completed session records.
//
// Two backends share one contract: MemoryStore (tests, ephemeral runs) and
// FileStore, a single append-only log in which every line is
//   <crc32 as 8 hex digits> <space> <compact JSON entry> <newline>
// and every append is flushed with fdatasync before put_* returns. A torn
// final line (crash mid-append) is dropped on open; damage anywhere else is
// reported as StorageCorrupt.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "crseval/ingestion.hpp"
#include "crseval/json_io.hpp"
#include "crseval/model.hpp"

namespace crseval {

using RecordId = std::uint64_t;

class DocumentStore {
public:
    virtual ~DocumentStore() = default;

    /// Inserts or replaces the study configuration.
    void put_study(const Study& study);
    /// Inserts or replaces the situation pool of a study.
    void put_pool(const std::string& study_id, const SituationPool& pool);
    /// Appends a completed record. Throws DuplicateSession when the session id
    /// is already stored and HitCodeCollision when the hit code is taken
    /// within the study (callers retry with a fresh code).
    RecordId put_record(const SessionRecord& record);

    std::optional<Study> get_study(const std::string& study_id) const;
    std::optional<SituationPool> get_pool(const std::string& study_id) const;
    SessionRecord get_record(RecordId id) const;
    /// Records of a study in insertion order.
    std::vector<std::pair<RecordId, SessionRecord>> list_records(const std::string& study_id) const;
    bool has_completed(const std::string& study_id, const std::string& worker_id) const;
    std::size_t record_count() const;

protected:
    // Called with the write lock held, after validation and before the
    // in-memory state changes. Throwing aborts the operation.
    virtual void persist(const Json& entry) = 0;
    // Called with the write lock held once the in-memory state reflects the
    // persisted entry.
    virtual void after_commit() {}

    // Rebuilds in-memory state from a persisted entry (used while loading).
    void apply(const Json& entry);
    // Entries describing the live state, in an order that replays to it.
    std::vector<Json> snapshot_entries() const;
    std::size_t superseded_entries() const { return superseded_; }
    void reset_superseded() { superseded_ = 0; }

    mutable std::shared_mutex mutex_;

private:
    void apply_locked(const Json& entry);

    std::map<std::string, Study> studies_;
    std::map<std::string, SituationPool> pools_;
    std::map<RecordId, SessionRecord> records_;
    std::set<std::string> session_ids_;
    std::map<std::string, std::set<std::string>> hit_codes_;
    std::map<std::string, std::set<std::string>> completed_workers_;
    RecordId next_id_ = 1;
    std::size_t superseded_ = 0;
};

class MemoryStore final : public DocumentStore {
protected:
    void persist(const Json&) override {}
};

class FileStore final : public DocumentStore {
public:
    /// Opens (creating if needed) the log at path and replays it.
    explicit FileStore(std::filesystem::path path, std::size_t compaction_threshold = 64);
    ~FileStore() override;

    FileStore(const FileStore&) = delete;
    FileStore& operator=(const FileStore&) = delete;

    /// Rewrites the log with only the live entries (atomic rename).
    void compact();

    const std::filesystem::path& path() const { return path_; }

protected:
    void persist(const Json& entry) override;
    void after_commit() override;

private:
    void open_for_append();
    void compact_locked();

    std::filesystem::path path_;
    std::size_t compaction_threshold_;
    int fd_ = -1;
};

/// Frames one log line (checksum, payload, newline).
std::string frame_log_line(const std::string& payload);

} // namespace crseval
