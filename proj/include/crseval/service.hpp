#pragma once

// HTTP-independent core of the participant API. Each handler takes the parsed
// request pieces and returns a status code plus JSON body; http.hpp binds the
// handlers to routes.
//
//   POST /api/session                          {"worker_id"}         -> {session_id, instructions_text}
//   POST /api/session/{id}/ack-instructions                          -> {"next": "task", "page": TaskPage}
//   POST /api/session/{id}/task/{k}            {"ratings", "timings_ms"}
//                                                                    -> {"next": "task", "page": ...}
//                                                                     | {"next": "questionnaire", "questionnaire": ...}
//   POST /api/session/{id}/questionnaire       {"answers"}           -> {"hit_code"}

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "crseval/ingestion.hpp"
#include "crseval/json_io.hpp"
#include "crseval/model.hpp"
#include "crseval/session.hpp"
#include "crseval/store.hpp"

namespace crseval {

struct ApiResponse {
    int status = 200;
    Json body;
};

using Clock = std::function<TimestampMs()>;

TimestampMs system_clock_ms();

/// Wire form of a task page. System ids and the attention marker stay on the
/// server; the client sees only slot numbers and texts (plus item spans for
/// highlighting).
Json task_page_to_wire(const TaskPage& page);
Json questionnaire_to_wire(const Study& study);

class EvaluationService {
public:
    EvaluationService(Study study, SituationPool pool, std::shared_ptr<DocumentStore> store,
                      Clock clock = system_clock_ms);

    ApiResponse create_session(const Json& body);
    ApiResponse acknowledge_instructions(const std::string& session_id);
    ApiResponse submit_task(const std::string& session_id, int task_index, const Json& body);
    ApiResponse submit_questionnaire(const std::string& session_id, const Json& body);

    const Study& study() const { return study_; }
    const SituationPool& pool() const { return pool_; }
    DocumentStore& store() { return *store_; }

    /// Snapshot of a live session (tests and diagnostics).
    std::optional<Session> session(const std::string& session_id) const;

private:
    struct Live {
        std::mutex mutex;
        Session session;
        TimestampMs page_shown_at = 0;
    };

    std::shared_ptr<Live> find(const std::string& session_id) const;
    Session create_session_for(const std::string& worker_id, TimestampMs now) const;

    Study study_;
    SituationPool pool_;
    std::shared_ptr<DocumentStore> store_;
    Clock clock_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Live>> sessions_;
    std::mutex commit_mutex_; // single-participation check + record append
};

/// Fresh 128-bit random token rendered as 32 hex digits.
std::string new_session_token();

struct ServiceConfig {
    std::string listen_address = "127.0.0.1";
    int port = 8080;
    std::filesystem::path study_path;      // empty: built-in default study
    std::filesystem::path pool_path;
    std::filesystem::path store_path = "crseval-store.log";
    std::filesystem::path thresholds_path; // optional ImplicitThresholds override
    std::filesystem::path static_dir;      // optional UI bundle to serve at /
};

/// Reads a JSON config file (all keys optional).
ServiceConfig load_service_config(const std::filesystem::path& path);
/// CRSEVAL_LISTEN, CRSEVAL_PORT, CRSEVAL_STUDY, CRSEVAL_POOL, CRSEVAL_STORE,
/// CRSEVAL_THRESHOLDS and CRSEVAL_STATIC override the corresponding fields.
ServiceConfig apply_env_overrides(ServiceConfig config,
                                  const std::function<const char*(const char*)>& getenv);

Study load_study(const std::filesystem::path& path);
ImplicitThresholds load_thresholds(const std::filesystem::path& path);

} // namespace crseval
