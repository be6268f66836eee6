#pragma once

// Domain vocabulary shared by every module: studies, dialog situations,
// sessions and the records they produce.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace crseval {

using TimestampMs = std::int64_t; // milliseconds since Unix epoch, UTC

enum class Speaker { Seeker, Recommender };

enum class QuestionKind { Likert5, SingleChoice, FreeText };

enum class ImplicitFlag { EventTooFast, TaskTooFast, TotalTooFast, TotalTooSlow };

struct RatingScale {
    int points = 5;
    std::vector<std::string> labels;
    bool attention_target_allowed = true;

    friend bool operator==(const RatingScale&, const RatingScale&) = default;
};

/// The 5-point meaningfulness scale, "Entirely meaningless" (1) to
/// "Perfectly meaningful" (5).
RatingScale default_scale();

struct Utterance {
    Speaker speaker = Speaker::Seeker;
    std::string text;
    int index = 0;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct DialogSituation {
    std::string situation_id;
    std::string source_dialog_id;
    std::vector<Utterance> utterances;
    std::map<std::string, std::string> responses; // system_id -> response text

    /// System ids in canonical order; slot indices in a TaskAssignment's
    /// display_order refer to positions in this list.
    std::vector<std::string> system_ids() const;

    friend bool operator==(const DialogSituation&, const DialogSituation&) = default;
};

struct QuestionnaireItem {
    std::string item_id;
    std::string prompt;
    QuestionKind kind = QuestionKind::Likert5;
    std::vector<std::string> options;

    friend bool operator==(const QuestionnaireItem&, const QuestionnaireItem&) = default;
};

struct ImplicitThresholds {
    std::int64_t min_event_ms = 300;
    std::int64_t min_task_ms = 3000;
    std::int64_t min_total_ms = 120000;
    std::int64_t max_total_ms = 3600000;

    friend bool operator==(const ImplicitThresholds&, const ImplicitThresholds&) = default;
};

struct Study {
    std::string study_id = "default";
    RatingScale scale = default_scale();
    int situations_per_session = 10;
    int systems_per_situation = 3;
    int attention_checks_per_session = 1;
    int attention_required_rating = 2;
    std::vector<QuestionnaireItem> questionnaire;
    std::vector<QuestionnaireItem> demographics;
    std::string instructions_text;
    ImplicitThresholds implicit_thresholds;
    std::uint64_t rng_seed = 0;

    friend bool operator==(const Study&, const Study&) = default;
};

/// Dialog-quality items (five Likert statements plus a free-text remarks box).
std::vector<QuestionnaireItem> default_questionnaire();
/// Demographic items (gender, age, fluency, education, movie habits, chat-bot use).
std::vector<QuestionnaireItem> default_demographics();
std::string default_instructions();

/// Ten situations, three systems, one attention check, 5-point scale, and the
/// questionnaires above.
Study default_study();

/// Empty iff every Study invariant holds. Each entry starts with the name of
/// the offending field.
std::vector<std::string> validate_study(const Study& study);

struct TaskAssignment {
    std::string situation_id;
    std::vector<int> display_order; // display slot -> system index
    bool is_attention = false;
    std::optional<int> attention_slot;

    friend bool operator==(const TaskAssignment&, const TaskAssignment&) = default;
};

enum class Phase { Landing, Instructions, Task, Questionnaire, Complete };

struct SessionState {
    Phase phase = Phase::Landing;
    int task_index = 0; // meaningful only for Phase::Task

    static SessionState task(int k) { return {Phase::Task, k}; }
    friend bool operator==(const SessionState&, const SessionState&) = default;
};

std::string to_string(SessionState state);

using Answer = std::variant<std::int64_t, std::string>;

struct TaskResult {
    int task_index = 0;
    std::string situation_id;
    std::vector<std::string> system_ids; // canonical order; display_order indexes into it
    std::vector<int> display_order;
    bool is_attention = false;
    std::optional<int> attention_slot;
    std::map<std::string, int> ratings; // system_id -> rating in [1, points]
    std::optional<int> attention_rating;
    std::vector<std::int64_t> per_event_times_ms;
    std::int64_t task_total_ms = 0;
    std::optional<std::int64_t> server_elapsed_ms;

    friend bool operator==(const TaskResult&, const TaskResult&) = default;
};

struct ReliabilityVerdict {
    bool attention_passed = true;
    std::set<ImplicitFlag> implicit_flags;
    bool discarded = false;

    friend bool operator==(const ReliabilityVerdict&, const ReliabilityVerdict&) = default;
};

struct SubmitTaskEvent {
    int task_index = 0;
    std::map<int, int> ratings; // display slot -> rating
    std::vector<std::int64_t> timings_ms;
    std::optional<std::int64_t> server_elapsed_ms;

    friend bool operator==(const SubmitTaskEvent&, const SubmitTaskEvent&) = default;
};

struct SubmitQuestionnaireEvent {
    std::map<std::string, Answer> answers;
    TimestampMs completed_at = 0;
    int hit_code_attempt = 0;

    friend bool operator==(const SubmitQuestionnaireEvent&, const SubmitQuestionnaireEvent&) = default;
};

struct ShowInstructionsEvent {
    friend bool operator==(const ShowInstructionsEvent&, const ShowInstructionsEvent&) = default;
};
struct AckInstructionsEvent {
    friend bool operator==(const AckInstructionsEvent&, const AckInstructionsEvent&) = default;
};

using SessionEvent = std::variant<ShowInstructionsEvent, AckInstructionsEvent, SubmitTaskEvent,
                                  SubmitQuestionnaireEvent>;

struct Session {
    std::string session_id;
    std::string study_id;
    std::string worker_id;
    std::uint64_t seed = 0;
    std::vector<TaskAssignment> tasks;
    SessionState state;
    TimestampMs created_at = 0;
    std::optional<std::string> hit_code;

    // Accumulated outcome.
    std::vector<TaskResult> results;
    std::map<std::string, Answer> questionnaire_answers;
    std::optional<TimestampMs> completed_at;
    std::vector<SessionEvent> events; // every accepted transition, in order

    friend bool operator==(const Session&, const Session&) = default;
};

struct SessionRecord {
    std::string study_id;
    std::string session_id;
    std::string worker_id;
    std::string hit_code;
    std::uint64_t session_seed = 0;
    TimestampMs created_at = 0;
    TimestampMs completed_at = 0;
    std::vector<TaskResult> tasks;
    std::map<std::string, Answer> questionnaire_answers;
    std::int64_t total_duration_ms = 0;
    ReliabilityVerdict reliability;
    std::vector<SessionEvent> events;

    friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// Checks the per-record invariants: one rating per non-attention slot and
/// every rating within the scale.
std::vector<std::string> validate_record(const SessionRecord& record, const RatingScale& scale);

} // namespace crseval
