#include "crseval/json_io.hpp"

namespace crseval {

using json_detail::optional_field;
using json_detail::optional_or;
using json_detail::required;
using json_detail::required_array;

SchemaError::SchemaError(std::string path, std::string detail)
    : Error(ErrorCode::SchemaViolation, detail), path_(std::move(path)), detail_(std::move(detail))
{
    rebuild();
}

void SchemaError::prepend(std::string_view segment)
{
    if (path_.empty()) {
        path_ = std::string(segment);
    } else if (path_.front() == '[') {
        path_ = std::string(segment) + path_;
    } else {
        path_ = std::string(segment) + "." + path_;
    }
    rebuild();
}

void SchemaError::rebuild()
{
    message_ = "schema violation at '" + (path_.empty() ? std::string("<root>") : path_) +
               "': " + detail_;
}

std::string_view to_string(Speaker speaker)
{
    return speaker == Speaker::Seeker ? "SEEKER" : "RECOMMENDER";
}

std::string_view to_string(QuestionKind kind)
{
    switch (kind) {
    case QuestionKind::Likert5: return "LIKERT_5";
    case QuestionKind::SingleChoice: return "SINGLE_CHOICE";
    case QuestionKind::FreeText: return "FREE_TEXT";
    }
    return "";
}

std::string_view to_string(ImplicitFlag flag)
{
    switch (flag) {
    case ImplicitFlag::EventTooFast: return "EVENT_TOO_FAST";
    case ImplicitFlag::TaskTooFast: return "TASK_TOO_FAST";
    case ImplicitFlag::TotalTooFast: return "TOTAL_TOO_FAST";
    case ImplicitFlag::TotalTooSlow: return "TOTAL_TOO_SLOW";
    }
    return "";
}

Speaker speaker_from_string(std::string_view text)
{
    if (text == "SEEKER") return Speaker::Seeker;
    if (text == "RECOMMENDER") return Speaker::Recommender;
    throw Error(ErrorCode::UnknownSpeaker, "unknown speaker '" + std::string(text) + "'");
}

QuestionKind question_kind_from_string(std::string_view text)
{
    if (text == "LIKERT_5") return QuestionKind::Likert5;
    if (text == "SINGLE_CHOICE") return QuestionKind::SingleChoice;
    if (text == "FREE_TEXT") return QuestionKind::FreeText;
    throw SchemaError("", "unknown question kind '" + std::string(text) + "'");
}

ImplicitFlag implicit_flag_from_string(std::string_view text)
{
    if (text == "EVENT_TOO_FAST") return ImplicitFlag::EventTooFast;
    if (text == "TASK_TOO_FAST") return ImplicitFlag::TaskTooFast;
    if (text == "TOTAL_TOO_FAST") return ImplicitFlag::TotalTooFast;
    if (text == "TOTAL_TOO_SLOW") return ImplicitFlag::TotalTooSlow;
    throw SchemaError("", "unknown implicit flag '" + std::string(text) + "'");
}

void to_json(Json& j, const RatingScale& v)
{
    j = Json{{"points", v.points},
             {"labels", v.labels},
             {"attention_target_allowed", v.attention_target_allowed}};
}

void from_json(const Json& j, RatingScale& v)
{
    v.points = required<int>(j, "points");
    v.labels = required_array<std::string>(j, "labels");
    v.attention_target_allowed = optional_or<bool>(j, "attention_target_allowed", true);
}

void to_json(Json& j, const Utterance& v)
{
    j = Json{{"speaker", to_string(v.speaker)}, {"text", v.text}, {"index", v.index}};
}

void from_json(const Json& j, Utterance& v)
{
    v.speaker = speaker_from_string(required<std::string>(j, "speaker"));
    v.text = required<std::string>(j, "text");
    v.index = required<int>(j, "index");
}

void to_json(Json& j, const DialogSituation& v)
{
    j = Json{{"situation_id", v.situation_id},
             {"source_dialog_id", v.source_dialog_id},
             {"utterances", v.utterances},
             {"responses", v.responses}};
}

void from_json(const Json& j, DialogSituation& v)
{
    v.situation_id = required<std::string>(j, "situation_id");
    v.source_dialog_id = required<std::string>(j, "source_dialog_id");
    v.utterances = required_array<Utterance>(j, "utterances");
    v.responses = required<std::map<std::string, std::string>>(j, "responses");
}

void to_json(Json& j, const QuestionnaireItem& v)
{
    j = Json{{"item_id", v.item_id},
             {"prompt", v.prompt},
             {"kind", to_string(v.kind)},
             {"options", v.options}};
}

void from_json(const Json& j, QuestionnaireItem& v)
{
    v.item_id = required<std::string>(j, "item_id");
    v.prompt = required<std::string>(j, "prompt");
    try {
        v.kind = question_kind_from_string(required<std::string>(j, "kind"));
    } catch (SchemaError& e) {
        if (e.path().empty()) e.prepend("kind");
        throw;
    }
    v.options = optional_or<std::vector<std::string>>(j, "options", {});
}

void to_json(Json& j, const ImplicitThresholds& v)
{
    j = Json{{"min_event_ms", v.min_event_ms},
             {"min_task_ms", v.min_task_ms},
             {"min_total_ms", v.min_total_ms},
             {"max_total_ms", v.max_total_ms}};
}

void from_json(const Json& j, ImplicitThresholds& v)
{
    const ImplicitThresholds defaults;
    v.min_event_ms = optional_or<std::int64_t>(j, "min_event_ms", defaults.min_event_ms);
    v.min_task_ms = optional_or<std::int64_t>(j, "min_task_ms", defaults.min_task_ms);
    v.min_total_ms = optional_or<std::int64_t>(j, "min_total_ms", defaults.min_total_ms);
    v.max_total_ms = optional_or<std::int64_t>(j, "max_total_ms", defaults.max_total_ms);
}

void to_json(Json& j, const Study& v)
{
    j = Json{{"study_id", v.study_id},
             {"scale", v.scale},
             {"situations_per_session", v.situations_per_session},
             {"systems_per_situation", v.systems_per_situation},
             {"attention_checks_per_session", v.attention_checks_per_session},
             {"attention_required_rating", v.attention_required_rating},
             {"questionnaire", v.questionnaire},
             {"demographics", v.demographics},
             {"instructions_text", v.instructions_text},
             {"implicit_thresholds", v.implicit_thresholds},
             {"rng_seed", v.rng_seed}};
}

void from_json(const Json& j, Study& v)
{
    v.study_id = required<std::string>(j, "study_id");
    v.scale = required<RatingScale>(j, "scale");
    v.situations_per_session = required<int>(j, "situations_per_session");
    v.systems_per_situation = required<int>(j, "systems_per_situation");
    v.attention_checks_per_session = required<int>(j, "attention_checks_per_session");
    v.attention_required_rating = required<int>(j, "attention_required_rating");
    v.questionnaire = required_array<QuestionnaireItem>(j, "questionnaire");
    v.demographics = required_array<QuestionnaireItem>(j, "demographics");
    v.instructions_text = required<std::string>(j, "instructions_text");
    v.implicit_thresholds = required<ImplicitThresholds>(j, "implicit_thresholds");
    v.rng_seed = required<std::uint64_t>(j, "rng_seed");
}

void to_json(Json& j, const TaskAssignment& v)
{
    j = Json{{"situation_id", v.situation_id},
             {"display_order", v.display_order},
             {"is_attention", v.is_attention},
             {"attention_slot", v.attention_slot ? Json(*v.attention_slot) : Json(nullptr)}};
}

void from_json(const Json& j, TaskAssignment& v)
{
    v.situation_id = required<std::string>(j, "situation_id");
    v.display_order = required_array<int>(j, "display_order");
    v.is_attention = required<bool>(j, "is_attention");
    v.attention_slot = optional_field<int>(j, "attention_slot");
}

namespace {

std::string_view phase_name(Phase phase)
{
    switch (phase) {
    case Phase::Landing: return "LANDING";
    case Phase::Instructions: return "INSTRUCTIONS";
    case Phase::Task: return "TASK";
    case Phase::Questionnaire: return "QUESTIONNAIRE";
    case Phase::Complete: return "COMPLETE";
    }
    return "";
}

} // namespace

void to_json(Json& j, const SessionState& v)
{
    j = Json{{"phase", phase_name(v.phase)}, {"task_index", v.task_index}};
}

void from_json(const Json& j, SessionState& v)
{
    const auto phase = required<std::string>(j, "phase");
    v.task_index = optional_or<int>(j, "task_index", 0);
    if (phase == "LANDING") v.phase = Phase::Landing;
    else if (phase == "INSTRUCTIONS") v.phase = Phase::Instructions;
    else if (phase == "TASK") v.phase = Phase::Task;
    else if (phase == "QUESTIONNAIRE") v.phase = Phase::Questionnaire;
    else if (phase == "COMPLETE") v.phase = Phase::Complete;
    else throw SchemaError("phase", "unknown phase '" + phase + "'");
}

Json answer_to_json(const Answer& answer)
{
    return std::visit([](const auto& a) { return Json(a); }, answer);
}

Answer answer_from_json(const Json& j)
{
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_string()) return j.get<std::string>();
    throw SchemaError("", "answer must be an integer or a string");
}

namespace {

Json answers_to_json(const std::map<std::string, Answer>& answers)
{
    Json out = Json::object();
    for (const auto& [id, a] : answers) out[id] = answer_to_json(a);
    return out;
}

std::map<std::string, Answer> answers_from_json(const Json& j, std::string_view key)
{
    const Json& obj = required<Json>(j, key);
    if (!obj.is_object()) throw SchemaError(std::string(key), "expected an object");
    std::map<std::string, Answer> out;
    for (const auto& [id, value] : obj.items()) {
        try {
            out.emplace(id, answer_from_json(value));
        } catch (SchemaError& e) {
            e.prepend(std::string(key) + "." + id);
            throw;
        }
    }
    return out;
}

template <typename T>
Json optional_json(const std::optional<T>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

} // namespace

void to_json(Json& j, const TaskResult& v)
{
    j = Json{{"task_index", v.task_index},
             {"situation_id", v.situation_id},
             {"system_ids", v.system_ids},
             {"display_order", v.display_order},
             {"is_attention", v.is_attention},
             {"attention_slot", optional_json(v.attention_slot)},
             {"ratings", v.ratings},
             {"attention_rating", optional_json(v.attention_rating)},
             {"per_event_times_ms", v.per_event_times_ms},
             {"task_total_ms", v.task_total_ms},
             {"server_elapsed_ms", optional_json(v.server_elapsed_ms)}};
}

void from_json(const Json& j, TaskResult& v)
{
    v.task_index = required<int>(j, "task_index");
    v.situation_id = required<std::string>(j, "situation_id");
    v.system_ids = required_array<std::string>(j, "system_ids");
    v.display_order = required_array<int>(j, "display_order");
    v.is_attention = required<bool>(j, "is_attention");
    v.attention_slot = optional_field<int>(j, "attention_slot");
    v.ratings = required<std::map<std::string, int>>(j, "ratings");
    v.attention_rating = optional_field<int>(j, "attention_rating");
    v.per_event_times_ms = required_array<std::int64_t>(j, "per_event_times_ms");
    v.task_total_ms = required<std::int64_t>(j, "task_total_ms");
    v.server_elapsed_ms =
        optional_field<std::int64_t>(j, "server_elapsed_ms");
}

void to_json(Json& j, const ReliabilityVerdict& v)
{
    Json flags = Json::array();
    for (auto f : v.implicit_flags) flags.push_back(to_string(f));
    j = Json{{"attention_passed", v.attention_passed},
             {"implicit_flags", flags},
             {"discarded", v.discarded}};
}

void from_json(const Json& j, ReliabilityVerdict& v)
{
    v.attention_passed = required<bool>(j, "attention_passed");
    v.implicit_flags.clear();
    for (const auto& name : required_array<std::string>(j, "implicit_flags")) {
        try {
            v.implicit_flags.insert(implicit_flag_from_string(name));
        } catch (SchemaError& e) {
            e.prepend("implicit_flags");
            throw;
        }
    }
    v.discarded = required<bool>(j, "discarded");
}

void to_json(Json& j, const SessionEvent& v)
{
    std::visit(
        [&j](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, ShowInstructionsEvent>) {
                j = Json{{"type", "show_instructions"}};
            } else if constexpr (std::is_same_v<E, AckInstructionsEvent>) {
                j = Json{{"type", "ack_instructions"}};
            } else if constexpr (std::is_same_v<E, SubmitTaskEvent>) {
                Json ratings = Json::object();
                for (const auto& [slot, r] : e.ratings) ratings[std::to_string(slot)] = r;
                j = Json{{"type", "submit_task"},
                         {"task_index", e.task_index},
                         {"ratings", ratings},
                         {"timings_ms", e.timings_ms},
                         {"server_elapsed_ms", optional_json(e.server_elapsed_ms)}};
            } else {
                j = Json{{"type", "submit_questionnaire"},
                         {"answers", answers_to_json(e.answers)},
                         {"completed_at", e.completed_at},
                         {"hit_code_attempt", e.hit_code_attempt}};
            }
        },
        v);
}

void from_json(const Json& j, SessionEvent& v)
{
    const auto type = required<std::string>(j, "type");
    if (type == "show_instructions") {
        v = ShowInstructionsEvent{};
    } else if (type == "ack_instructions") {
        v = AckInstructionsEvent{};
    } else if (type == "submit_task") {
        SubmitTaskEvent e;
        e.task_index = required<int>(j, "task_index");
        for (const auto& [slot, r] : required<std::map<std::string, int>>(j, "ratings")) {
            try {
                e.ratings[std::stoi(slot)] = r;
            } catch (const std::exception&) {
                throw SchemaError("ratings." + slot, "slot key must be an integer");
            }
        }
        e.timings_ms = required_array<std::int64_t>(j, "timings_ms");
        e.server_elapsed_ms =
            optional_field<std::int64_t>(j, "server_elapsed_ms");
        v = std::move(e);
    } else if (type == "submit_questionnaire") {
        SubmitQuestionnaireEvent e;
        e.answers = answers_from_json(j, "answers");
        e.completed_at = required<TimestampMs>(j, "completed_at");
        e.hit_code_attempt = required<int>(j, "hit_code_attempt");
        v = std::move(e);
    } else {
        throw SchemaError("type", "unknown event type '" + type + "'");
    }
}

void to_json(Json& j, const Session& v)
{
    j = Json{{"session_id", v.session_id},
             {"study_id", v.study_id},
             {"worker_id", v.worker_id},
             {"seed", v.seed},
             {"tasks", v.tasks},
             {"state", v.state},
             {"created_at", v.created_at},
             {"hit_code", optional_json(v.hit_code)},
             {"results", v.results},
             {"questionnaire_answers", answers_to_json(v.questionnaire_answers)},
             {"completed_at", optional_json(v.completed_at)},
             {"events", v.events}};
}

void from_json(const Json& j, Session& v)
{
    v.session_id = required<std::string>(j, "session_id");
    v.study_id = required<std::string>(j, "study_id");
    v.worker_id = required<std::string>(j, "worker_id");
    v.seed = required<std::uint64_t>(j, "seed");
    v.tasks = required_array<TaskAssignment>(j, "tasks");
    v.state = required<SessionState>(j, "state");
    v.created_at = required<TimestampMs>(j, "created_at");
    v.hit_code = optional_field<std::string>(j, "hit_code");
    v.results = required_array<TaskResult>(j, "results");
    v.questionnaire_answers = answers_from_json(j, "questionnaire_answers");
    v.completed_at = optional_field<TimestampMs>(j, "completed_at");
    v.events = required_array<SessionEvent>(j, "events");
}

void to_json(Json& j, const SessionRecord& v)
{
    j = Json{{"study_id", v.study_id},
             {"session_id", v.session_id},
             {"worker_id", v.worker_id},
             {"hit_code", v.hit_code},
             {"session_seed", v.session_seed},
             {"created_at", v.created_at},
             {"completed_at", v.completed_at},
             {"tasks", v.tasks},
             {"questionnaire_answers", answers_to_json(v.questionnaire_answers)},
             {"total_duration_ms", v.total_duration_ms},
             {"reliability", v.reliability},
             {"events", v.events}};
}

void from_json(const Json& j, SessionRecord& v)
{
    v.study_id = required<std::string>(j, "study_id");
    v.session_id = required<std::string>(j, "session_id");
    v.worker_id = required<std::string>(j, "worker_id");
    v.hit_code = required<std::string>(j, "hit_code");
    v.session_seed = required<std::uint64_t>(j, "session_seed");
    v.created_at = required<TimestampMs>(j, "created_at");
    v.completed_at = required<TimestampMs>(j, "completed_at");
    v.tasks = required_array<TaskResult>(j, "tasks");
    v.questionnaire_answers = answers_from_json(j, "questionnaire_answers");
    v.total_duration_ms = required<std::int64_t>(j, "total_duration_ms");
    v.reliability = required<ReliabilityVerdict>(j, "reliability");
    v.events = optional_or<std::vector<SessionEvent>>(j, "events", {});
}

} // namespace crseval
