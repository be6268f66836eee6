#include "crseval/service.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "crseval/error.hpp"
#include "crseval/reliability.hpp"

namespace crseval {

namespace {

constexpr int kMaxHitCodeAttempts = 16;

ApiResponse error_response(int status, std::string_view code, const std::string& message)
{
    return {status, Json{{"error", code}, {"message", message}}};
}

int status_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::WrongState:
    case ErrorCode::DuplicateSession:
        return 409;
    case ErrorCode::MissingRating:
    case ErrorCode::RatingOutOfRange:
    case ErrorCode::MissingAnswer:
    case ErrorCode::InvalidOption:
    case ErrorCode::InvalidArgument:
    case ErrorCode::SchemaViolation:
        return 422;
    case ErrorCode::PoolTooSmall:
    case ErrorCode::StorageUnavailable:
        return 503;
    default:
        return 500;
    }
}

ApiResponse from_error(const Error& e)
{
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
}

Json spans_to_json(const std::string& text)
{
    Json out = Json::array();
    try {
        for (const auto& span : scan_item_markup(text)) {
            out.push_back(Json{{"start", span.start}, {"end", span.end}, {"title", span.title}});
        }
    } catch (const Error&) {
        // Pool validation guarantees balanced quotes; the instruction text has none.
    }
    return out;
}

std::map<int, int> parse_ratings(const Json& body)
{
    const Json& ratings = json_detail::required<Json>(body, "ratings");
    std::map<int, int> out;
    if (ratings.is_array()) {
        for (std::size_t i = 0; i < ratings.size(); ++i) {
            if (!ratings[i].is_number_integer()) {
                throw SchemaError("ratings[" + std::to_string(i) + "]", "expected an integer");
            }
            out[static_cast<int>(i)] = ratings[i].get<int>();
        }
    } else if (ratings.is_object()) {
        for (const auto& [key, value] : ratings.items()) {
            std::size_t used = 0;
            int slot = -1;
            try {
                slot = std::stoi(key, &used);
            } catch (const std::exception&) {
            }
            if (used != key.size() || slot < 0) {
                throw SchemaError("ratings." + key, "slot keys must be non-negative integers");
            }
            if (!value.is_number_integer()) {
                throw SchemaError("ratings." + key, "expected an integer");
            }
            out[slot] = value.get<int>();
        }
    } else {
        throw SchemaError("ratings", "expected an object or an array");
    }
    return out;
}

std::map<std::string, Answer> parse_answers(const Json& body)
{
    const Json& answers = json_detail::required<Json>(body, "answers");
    if (!answers.is_object()) {
        throw SchemaError("answers", "expected an object");
    }
    std::map<std::string, Answer> out;
    for (const auto& [id, value] : answers.items()) {
        if (value.is_null()) continue;
        try {
            out.emplace(id, answer_from_json(value));
        } catch (SchemaError& e) {
            e.prepend("answers." + id);
            throw;
        }
    }
    return out;
}

} // namespace

TimestampMs system_clock_ms()
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string new_session_token()
{
    static thread_local std::random_device device;
    std::uint64_t hi = (static_cast<std::uint64_t>(device()) << 32) | device();
    std::uint64_t lo = (static_cast<std::uint64_t>(device()) << 32) | device();
    return to_hex(hi) + to_hex(lo);
}

Json task_page_to_wire(const TaskPage& page)
{
    Json utterances = Json::array();
    for (const auto& u : page.situation.utterances) {
        utterances.push_back(Json{{"speaker", to_string(u.speaker)},
                                  {"index", u.index},
                                  {"text", u.text},
                                  {"items", spans_to_json(u.text)}});
    }
    Json responses = Json::array();
    for (const auto& r : page.ordered_responses) {
        responses.push_back(Json{{"slot", r.slot}, {"text", r.text}, {"items", spans_to_json(r.text)}});
    }
    return Json{{"task_index", page.task_index},
                {"task_count", page.task_count},
                {"situation_id", page.situation.situation_id},
                {"utterances", std::move(utterances)},
                {"responses", std::move(responses)},
                {"scale", Json{{"points", page.scale.points}, {"labels", page.scale.labels}}}};
}

Json questionnaire_to_wire(const Study& study)
{
    return Json{{"questionnaire", study.questionnaire}, {"demographics", study.demographics}};
}

EvaluationService::EvaluationService(Study study, SituationPool pool,
                                     std::shared_ptr<DocumentStore> store, Clock clock)
    : study_(std::move(study)), pool_(std::move(pool)), store_(std::move(store)), clock_(std::move(clock))
{
    if (auto violations = validate_study(study_); !violations.empty()) {
        throw Error(ErrorCode::InvalidArgument, "invalid study: " + violations.front());
    }
    for (const auto& s : pool_.situations) {
        if (auto v = validate_situation(s, study_.systems_per_situation); !v.empty()) {
            throw Error(ErrorCode::InvariantViolation, "situation " + s.situation_id + ": " + v.front());
        }
    }
    store_->put_study(study_);
    store_->put_pool(study_.study_id, pool_);
}

std::shared_ptr<EvaluationService::Live> EvaluationService::find(const std::string& session_id) const
{
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::optional<Session> EvaluationService::session(const std::string& session_id) const
{
    auto live = find(session_id);
    if (!live) return std::nullopt;
    std::lock_guard lock(live->mutex);
    return live->session;
}

ApiResponse EvaluationService::create_session(const Json& body)
{
    std::string worker_id;
    try {
        worker_id = json_detail::required<std::string>(body, "worker_id");
    } catch (const SchemaError& e) {
        return error_response(400, to_string(e.code()), e.what());
    }
    if (worker_id.empty()) {
        return error_response(400, "invalid-argument", "worker_id must be non-empty");
    }
    if (store_->has_completed(study_.study_id, worker_id)) {
        return error_response(409, "already-participated",
                              "worker has already completed this study");
    }
    try {
        auto live = std::make_shared<Live>();
        const auto now = clock_();
        live->session = show_instructions(create_session_for(worker_id, now));
        const auto id = live->session.session_id;
        {
            std::lock_guard lock(sessions_mutex_);
            sessions_.emplace(id, std::move(live));
        }
        return {200, Json{{"session_id", id}, {"instructions_text", study_.instructions_text}}};
    } catch (const Error& e) {
        return from_error(e);
    }
}

Session EvaluationService::create_session_for(const std::string& worker_id, TimestampMs now) const
{
    return crseval::create_session(study_, pool_, worker_id, session_seed(study_, worker_id),
                                   new_session_token(), now);
}

ApiResponse EvaluationService::acknowledge_instructions(const std::string& session_id)
{
    auto live = find(session_id);
    if (!live) return error_response(404, "unknown-session", "no such session");
    std::lock_guard lock(live->mutex);
    try {
        Session next = crseval::acknowledge_instructions(live->session);
        TaskPage page = render_task(next, 0, pool_, study_);
        live->session = std::move(next);
        live->page_shown_at = clock_();
        return {200, Json{{"next", "task"}, {"page", task_page_to_wire(page)}}};
    } catch (const Error& e) {
        return from_error(e);
    }
}

ApiResponse EvaluationService::submit_task(const std::string& session_id, int task_index,
                                           const Json& body)
{
    auto live = find(session_id);
    if (!live) return error_response(404, "unknown-session", "no such session");
    std::lock_guard lock(live->mutex);
    try {
        // State first, so a stale or replayed submission is a 409 whatever its payload.
        if (live->session.state != SessionState::task(task_index)) {
            throw Error(ErrorCode::WrongState, "session is in state " + to_string(live->session.state) +
                                                   ", not TASK(" + std::to_string(task_index) + ")");
        }
        const auto ratings = parse_ratings(body);
        const auto timings = json_detail::optional_or<std::vector<std::int64_t>>(body, "timings_ms", {});
        const auto now = clock_();
        const std::int64_t elapsed = std::max<std::int64_t>(0, now - live->page_shown_at);
        Session next = crseval::submit_task(live->session, task_index, ratings, timings, study_, pool_, elapsed);

        ApiResponse response;
        if (next.state.phase == Phase::Task) {
            TaskPage page = render_task(next, next.state.task_index, pool_, study_);
            response = {200, Json{{"next", "task"}, {"page", task_page_to_wire(page)}}};
        } else {
            response = {200, Json{{"next", "questionnaire"}, {"questionnaire", questionnaire_to_wire(study_)}}};
        }
        live->session = std::move(next);
        live->page_shown_at = now;
        return response;
    } catch (const Error& e) {
        return from_error(e);
    }
}

ApiResponse EvaluationService::submit_questionnaire(const std::string& session_id, const Json& body)
{
    auto live = find(session_id);
    if (!live) return error_response(404, "unknown-session", "no such session");
    std::lock_guard lock(live->mutex);
    try {
        if (live->session.state.phase != Phase::Questionnaire) {
            throw Error(ErrorCode::WrongState,
                        "session is in state " + to_string(live->session.state) + ", not QUESTIONNAIRE");
        }
        const auto answers = parse_answers(body);
        const auto now = clock_();

        std::lock_guard commit(commit_mutex_);
        if (store_->has_completed(study_.study_id, live->session.worker_id)) {
            return error_response(409, "already-participated", "worker has already completed this study");
        }
        for (int attempt = 0; attempt < kMaxHitCodeAttempts; ++attempt) {
            Session done = crseval::submit_questionnaire(live->session, answers, study_, now, attempt);
            SessionRecord record = assess_record(to_record(done), study_);
            try {
                store_->put_record(record);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::HitCodeCollision) continue;
                throw;
            }
            live->session = std::move(done);
            return {200, Json{{"hit_code", *live->session.hit_code}}};
        }
        return error_response(503, "hit-code-exhausted", "could not issue a unique hit code");
    } catch (const Error& e) {
        return from_error(e);
    }
}

ServiceConfig load_service_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open config '" + path.string() + "'");
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ParseError, "config '" + path.string() + "': " + e.what());
    }
    ServiceConfig c;
    using json_detail::optional_or;
    c.listen_address = optional_or<std::string>(j, "listen_address", c.listen_address);
    c.port = optional_or<int>(j, "port", c.port);
    c.study_path = optional_or<std::string>(j, "study_path", c.study_path.string());
    c.pool_path = optional_or<std::string>(j, "pool_path", c.pool_path.string());
    c.store_path = optional_or<std::string>(j, "store_path", c.store_path.string());
    c.thresholds_path = optional_or<std::string>(j, "thresholds_path", c.thresholds_path.string());
    c.static_dir = optional_or<std::string>(j, "static_dir", c.static_dir.string());
    return c;
}

ServiceConfig apply_env_overrides(ServiceConfig config,
                                  const std::function<const char*(const char*)>& getenv)
{
    if (const char* v = getenv("CRSEVAL_LISTEN")) config.listen_address = v;
    if (const char* v = getenv("CRSEVAL_PORT")) {
        try {
            config.port = std::stoi(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, std::string("CRSEVAL_PORT is not a number: ") + v);
        }
    }
    if (const char* v = getenv("CRSEVAL_STUDY")) config.study_path = v;
    if (const char* v = getenv("CRSEVAL_POOL")) config.pool_path = v;
    if (const char* v = getenv("CRSEVAL_STORE")) config.store_path = v;
    if (const char* v = getenv("CRSEVAL_THRESHOLDS")) config.thresholds_path = v;
    if (const char* v = getenv("CRSEVAL_STATIC")) config.static_dir = v;
    return config;
}

namespace {

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    }
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

} // namespace

Study load_study(const std::filesystem::path& path)
{
    return read_json_file(path).get<Study>();
}

ImplicitThresholds load_thresholds(const std::filesystem::path& path)
{
    return read_json_file(path).get<ImplicitThresholds>();
}

} // namespace crseval
