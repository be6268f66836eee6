#include "crseval/store.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include "crseval/error.hpp"

namespace crseval {

namespace {

std::string crc_hex(const std::string& payload)
{
    const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
                             static_cast<uInt>(payload.size()));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

std::string errno_text()
{
    return std::strerror(errno);
}

void write_all(int fd, const std::string& data)
{
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::StorageUnavailable, "write failed: " + errno_text());
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

void sync_directory(const std::filesystem::path& dir)
{
    const int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

} // namespace

std::string frame_log_line(const std::string& payload)
{
    return crc_hex(payload) + " " + payload + "\n";
}

// ---------------------------------------------------------------------------
// DocumentStore

void DocumentStore::put_study(const Study& study)
{
    if (auto violations = validate_study(study); !violations.empty()) {
        throw Error(ErrorCode::InvariantViolation, "study " + study.study_id + ": " + violations.front());
    }
    std::unique_lock lock(mutex_);
    auto it = studies_.find(study.study_id);
    if (it != studies_.end() && it->second == study) {
        return;
    }
    Json entry{{"kind", "study"}, {"study", study}};
    persist(entry);
    apply_locked(entry);
    after_commit();
}

void DocumentStore::put_pool(const std::string& study_id, const SituationPool& pool)
{
    std::unique_lock lock(mutex_);
    auto it = pools_.find(study_id);
    if (it != pools_.end() && it->second.situations == pool.situations) {
        return;
    }
    Json entry{{"kind", "pool"}, {"study_id", study_id}, {"situations", pool.situations}};
    persist(entry);
    apply_locked(entry);
    after_commit();
}

RecordId DocumentStore::put_record(const SessionRecord& record)
{
    std::unique_lock lock(mutex_);
    auto study = studies_.find(record.study_id);
    if (study == studies_.end()) {
        throw Error(ErrorCode::UnknownStudy, "record for unknown study '" + record.study_id + "'");
    }
    if (auto violations = validate_record(record, study->second.scale); !violations.empty()) {
        throw Error(ErrorCode::InvariantViolation,
                    "record " + record.session_id + ": " + violations.front());
    }
    if (session_ids_.contains(record.session_id)) {
        throw Error(ErrorCode::DuplicateSession, "session " + record.session_id + " already stored");
    }
    auto codes = hit_codes_.find(record.study_id);
    if (codes != hit_codes_.end() && codes->second.contains(record.hit_code)) {
        throw Error(ErrorCode::HitCodeCollision,
                    "hit code already issued in study '" + record.study_id + "'");
    }
    const RecordId id = next_id_;
    Json entry{{"kind", "record"}, {"id", id}, {"record", record}};
    persist(entry);
    apply_locked(entry);
    after_commit();
    return id;
}

std::optional<Study> DocumentStore::get_study(const std::string& study_id) const
{
    std::shared_lock lock(mutex_);
    auto it = studies_.find(study_id);
    if (it == studies_.end()) return std::nullopt;
    return it->second;
}

std::optional<SituationPool> DocumentStore::get_pool(const std::string& study_id) const
{
    std::shared_lock lock(mutex_);
    auto it = pools_.find(study_id);
    if (it == pools_.end()) return std::nullopt;
    return it->second;
}

SessionRecord DocumentStore::get_record(RecordId id) const
{
    std::shared_lock lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) {
        throw Error(ErrorCode::UnknownRecord, "no record with id " + std::to_string(id));
    }
    return it->second;
}

std::vector<std::pair<RecordId, SessionRecord>>
DocumentStore::list_records(const std::string& study_id) const
{
    std::shared_lock lock(mutex_);
    std::vector<std::pair<RecordId, SessionRecord>> out;
    for (const auto& [id, record] : records_) {
        if (record.study_id == study_id) out.emplace_back(id, record);
    }
    return out;
}

bool DocumentStore::has_completed(const std::string& study_id, const std::string& worker_id) const
{
    std::shared_lock lock(mutex_);
    auto it = completed_workers_.find(study_id);
    return it != completed_workers_.end() && it->second.contains(worker_id);
}

std::size_t DocumentStore::record_count() const
{
    std::shared_lock lock(mutex_);
    return records_.size();
}

void DocumentStore::apply(const Json& entry)
{
    std::unique_lock lock(mutex_);
    apply_locked(entry);
}

void DocumentStore::apply_locked(const Json& entry)
{
    const auto kind = json_detail::required<std::string>(entry, "kind");
    if (kind == "study") {
        auto study = json_detail::required<Study>(entry, "study");
        auto id = study.study_id;
        if (!studies_.insert_or_assign(id, std::move(study)).second) ++superseded_;
    } else if (kind == "pool") {
        SituationPool pool;
        pool.situations = json_detail::required_array<DialogSituation>(entry, "situations");
        if (!pools_.insert_or_assign(json_detail::required<std::string>(entry, "study_id"),
                                     std::move(pool))
                 .second) {
            ++superseded_;
        }
    } else if (kind == "record") {
        const auto id = json_detail::required<RecordId>(entry, "id");
        auto record = json_detail::required<SessionRecord>(entry, "record");
        session_ids_.insert(record.session_id);
        hit_codes_[record.study_id].insert(record.hit_code);
        completed_workers_[record.study_id].insert(record.worker_id);
        records_.insert_or_assign(id, std::move(record));
        next_id_ = std::max(next_id_, id + 1);
    } else {
        throw SchemaError("kind", "unknown log entry kind '" + kind + "'");
    }
}

std::vector<Json> DocumentStore::snapshot_entries() const
{
    std::vector<Json> out;
    for (const auto& [id, study] : studies_) {
        out.push_back(Json{{"kind", "study"}, {"study", study}});
    }
    for (const auto& [id, pool] : pools_) {
        out.push_back(Json{{"kind", "pool"}, {"study_id", id}, {"situations", pool.situations}});
    }
    for (const auto& [id, record] : records_) {
        out.push_back(Json{{"kind", "record"}, {"id", id}, {"record", record}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// FileStore

FileStore::FileStore(std::filesystem::path path, std::size_t compaction_threshold)
    : path_(std::move(path)), compaction_threshold_(compaction_threshold)
{
    std::error_code ec;
    if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path(), ec);
    }

    std::string content;
    if (std::filesystem::exists(path_)) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) {
            throw Error(ErrorCode::StorageUnavailable, "cannot read store '" + path_.string() + "'");
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        content = buffer.str();
    }

    std::size_t offset = 0;
    std::size_t line_no = 0;
    std::optional<std::size_t> torn_at;
    while (offset < content.size()) {
        ++line_no;
        const std::size_t nl = content.find('\n', offset);
        if (nl == std::string::npos) {
            torn_at = offset; // final line never got its newline
            break;
        }
        const std::string line = content.substr(offset, nl - offset);
        const bool framed = line.size() > 9 && line[8] == ' ';
        const std::string payload = framed ? line.substr(9) : std::string();
        const bool intact = framed && crc_hex(payload) == line.substr(0, 8);
        if (!intact) {
            if (nl + 1 == content.size()) {
                torn_at = offset;
                break;
            }
            throw Error(ErrorCode::StorageCorrupt, path_.string() + ":" + std::to_string(line_no) +
                                                       ": checksum mismatch");
        }
        try {
            apply(Json::parse(payload));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::StorageCorrupt,
                        path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        offset = nl + 1;
    }

    if (torn_at) {
        if (::truncate(path_.c_str(), static_cast<off_t>(*torn_at)) != 0) {
            throw Error(ErrorCode::StorageUnavailable,
                        "cannot drop torn tail of '" + path_.string() + "': " + errno_text());
        }
    }
    open_for_append();
    if (superseded_entries() > 0) {
        compact();
    }
}

FileStore::~FileStore()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

void FileStore::open_for_append()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw Error(ErrorCode::StorageUnavailable,
                    "cannot open store '" + path_.string() + "': " + errno_text());
    }
}

void FileStore::persist(const Json& entry)
{
    if (fd_ < 0) {
        throw Error(ErrorCode::StorageUnavailable, "store '" + path_.string() + "' is not open");
    }
    struct stat st{};
    const bool have_size = ::fstat(fd_, &st) == 0;
    const std::string line = frame_log_line(entry.dump());
    try {
        write_all(fd_, line);
        if (::fdatasync(fd_) != 0) {
            throw Error(ErrorCode::StorageUnavailable, "fdatasync failed: " + errno_text());
        }
    } catch (const Error&) {
        // Roll back a partial append so the next write starts on a line boundary.
        if (have_size && ::ftruncate(fd_, st.st_size) != 0) {
            // nothing more to do; the torn tail is dropped on the next open
        }
        throw;
    }
}

void FileStore::after_commit()
{
    if (superseded_entries() >= compaction_threshold_) {
        compact_locked();
    }
}

void FileStore::compact()
{
    std::unique_lock lock(mutex_);
    compact_locked();
}

void FileStore::compact_locked()
{
    auto tmp = path_;
    tmp += ".compact";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw Error(ErrorCode::StorageUnavailable, "cannot create '" + tmp.string() + "': " + errno_text());
    }
    try {
        for (const auto& entry : snapshot_entries()) {
            write_all(fd, frame_log_line(entry.dump()));
        }
        if (::fsync(fd) != 0) {
            throw Error(ErrorCode::StorageUnavailable, "fsync failed: " + errno_text());
        }
    } catch (...) {
        ::close(fd);
        std::filesystem::remove(tmp);
        throw;
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path_.c_str()) != 0) {
        throw Error(ErrorCode::StorageUnavailable, "rename failed: " + errno_text());
    }
    sync_directory(path_.parent_path());
    reset_superseded();
    open_for_append();
}

} // namespace crseval
