#include "crseval/model.hpp"

#include <algorithm>
#include <set>

#include "crseval/error.hpp"

namespace crseval {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::EmptyDialog: return "empty-dialog";
    case ErrorCode::UnknownSpeaker: return "unknown-speaker";
    case ErrorCode::UnbalancedQuotes: return "unbalanced-quotes";
    case ErrorCode::CutNotSeeker: return "cut-not-seeker";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::DanglingReference: return "dangling-reference";
    case ErrorCode::InvariantViolation: return "invariant-violation";
    case ErrorCode::PoolTooSmall: return "pool-too-small";
    case ErrorCode::WrongState: return "wrong-state";
    case ErrorCode::UnknownSituation: return "unknown-situation";
    case ErrorCode::MissingRating: return "missing-rating";
    case ErrorCode::RatingOutOfRange: return "rating-out-of-range";
    case ErrorCode::MissingAnswer: return "missing-answer";
    case ErrorCode::InvalidOption: return "invalid-option";
    case ErrorCode::MissingAttentionRating: return "missing-attention-rating";
    case ErrorCode::StorageUnavailable: return "storage-unavailable";
    case ErrorCode::StorageCorrupt: return "storage-corrupt";
    case ErrorCode::DuplicateSession: return "duplicate-session";
    case ErrorCode::HitCodeCollision: return "hit-code-collision";
    case ErrorCode::UnknownStudy: return "unknown-study";
    case ErrorCode::UnknownRecord: return "unknown-record";
    case ErrorCode::VersionMismatch: return "version-mismatch";
    case ErrorCode::SchemaViolation: return "schema-violation";
    case ErrorCode::DegenerateData: return "degenerate-data";
    case ErrorCode::UnbalancedGroups: return "unbalanced-groups";
    case ErrorCode::IoError: return "io-error";
    }
    return "unknown";
}

RatingScale default_scale()
{
    return RatingScale{
        5,
        {"Entirely meaningless", "Mostly meaningless", "Somewhat meaningful", "Mostly meaningful",
         "Perfectly meaningful"},
        true,
    };
}

std::vector<std::string> DialogSituation::system_ids() const
{
    std::vector<std::string> ids;
    ids.reserve(responses.size());
    for (const auto& [id, text] : responses) {
        ids.push_back(id);
    }
    return ids;
}

std::vector<QuestionnaireItem> default_questionnaire()
{
    using K = QuestionKind;
    return {
        {"Q1", "I found the presented dialogues natural.", K::Likert5, {}},
        {"Q2", "The presented dialogue situations look realistic.", K::Likert5, {}},
        {"Q3", "I could imagine that such dialogues also happen between humans.", K::Likert5, {}},
        {"Q4",
         "Considering only the best responses found in each dialogue, I would find the chat-bot "
         "useful.",
         K::Likert5,
         {}},
        {"Q5",
         "Considering only the best responses found in each dialogue, I would probably use such a "
         "movie recommendation chat-bot in the future.",
         K::Likert5,
         {}},
        {"remarks", "General remarks or suggestions (optional).", K::FreeText, {}},
    };
}

std::vector<QuestionnaireItem> default_demographics()
{
    using K = QuestionKind;
    return {
        {"gender", "Gender", K::SingleChoice, {"Male", "Female", "Other"}},
        {"age", "Age", K::SingleChoice, {"18-25", "25-30", "30-35", "35-45", "45-70"}},
        {"english_fluency",
         "English fluency level",
         K::SingleChoice,
         {"Beginner", "Intermediate", "Fluent", "Advanced"}},
        {"education",
         "Education level",
         K::SingleChoice,
         {"High school or less", "Bachelor's", "Master's", "Doctorate", "Other"}},
        {"movie_frequency",
         "Frequency of watching movies",
         K::SingleChoice,
         {"Everyday", "Several times a week", "Once in a week", "Once every few weeks",
          "Less frequent"}},
        {"chatbot_any", "Ever interacted with a chat-bot", K::SingleChoice, {"Yes", "No"}},
        {"chatbot_movies",
         "Ever interacted with a chat-bot for getting movie recommendations",
         K::SingleChoice,
         {"Yes", "No"}},
    };
}

std::string default_instructions()
{
    return "You will see a series of short movie-recommendation dialogs. Each dialog ends with a "
           "message from the user, followed by several candidate responses. Rate how meaningful "
           "each response is as the next turn of the conversation.\n\n"
           "A meaningful response is a logical continuation of the dialog. If it recommends a "
           "movie (movie titles appear in double quotes), the recommendation should match the "
           "interests and preferences the user has stated so far. If it does not recommend "
           "anything, judge it as a reply to the user's last message in the context of the whole "
           "dialog.\n\n"
           "Rate each response independently, using your own judgement. Read every response "
           "carefully: some pages contain explicit instructions on how to answer.";
}

Study default_study()
{
    Study study;
    study.questionnaire = default_questionnaire();
    study.demographics = default_demographics();
    study.instructions_text = default_instructions();
    return study;
}

namespace {

void validate_items(const std::vector<QuestionnaireItem>& items, const std::string& field,
                    std::set<std::string>& seen_ids, std::vector<std::string>& out)
{
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& item = items[i];
        const std::string where = field + "[" + std::to_string(i) + "]";
        if (item.item_id.empty()) {
            out.push_back(where + ".item_id: must be non-empty");
        } else if (!seen_ids.insert(item.item_id).second) {
            out.push_back(where + ".item_id: duplicate id '" + item.item_id + "'");
        }
        if (item.kind == QuestionKind::SingleChoice) {
            std::set<std::string> distinct(item.options.begin(), item.options.end());
            if (item.options.size() < 2 || distinct.size() != item.options.size()) {
                out.push_back(where + ".options: single-choice items need at least two distinct options");
            }
        } else if (!item.options.empty()) {
            out.push_back(where + ".options: only single-choice items carry options");
        }
    }
}

} // namespace

std::vector<std::string> validate_study(const Study& study)
{
    std::vector<std::string> out;

    const auto& scale = study.scale;
    if (scale.points < 2) {
        out.push_back("scale.points: must be at least 2");
    }
    if (static_cast<int>(scale.labels.size()) != scale.points) {
        out.push_back("scale.labels: expected " + std::to_string(scale.points) + " labels, got " +
                      std::to_string(scale.labels.size()));
    }
    {
        std::set<std::string> distinct(scale.labels.begin(), scale.labels.end());
        bool any_empty = std::any_of(scale.labels.begin(), scale.labels.end(),
                                     [](const std::string& l) { return l.empty(); });
        if (any_empty || distinct.size() != scale.labels.size()) {
            out.push_back("scale.labels: labels must be non-empty and pairwise distinct");
        }
    }

    if (study.situations_per_session < 1) {
        out.push_back("situations_per_session: must be at least 1");
    }
    if (study.systems_per_situation < 1) {
        out.push_back("systems_per_situation: must be at least 1");
    }
    if (study.attention_checks_per_session < 0 ||
        (study.situations_per_session >= 1 &&
         study.attention_checks_per_session >= study.situations_per_session)) {
        out.push_back("attention_checks_per_session: must lie in [0, situations_per_session)");
    }
    if (study.attention_checks_per_session > 0) {
        if (study.attention_required_rating < 1 || study.attention_required_rating > scale.points) {
            out.push_back("attention_required_rating: must lie in [1, scale.points]");
        }
        if (!scale.attention_target_allowed) {
            out.push_back("scale.attention_target_allowed: attention checks configured on a scale "
                          "that does not allow them");
        }
    }

    std::set<std::string> ids;
    validate_items(study.questionnaire, "questionnaire", ids, out);
    validate_items(study.demographics, "demographics", ids, out);

    const auto& t = study.implicit_thresholds;
    if (t.min_event_ms < 0 || t.min_task_ms < 0 || t.min_total_ms < 0 || t.max_total_ms < 0) {
        out.push_back("implicit_thresholds: thresholds must be non-negative");
    } else if (t.min_total_ms > t.max_total_ms) {
        out.push_back("implicit_thresholds: min_total_ms exceeds max_total_ms");
    }
    return out;
}

std::string to_string(SessionState state)
{
    switch (state.phase) {
    case Phase::Landing: return "LANDING";
    case Phase::Instructions: return "INSTRUCTIONS";
    case Phase::Task: return "TASK(" + std::to_string(state.task_index) + ")";
    case Phase::Questionnaire: return "QUESTIONNAIRE";
    case Phase::Complete: return "COMPLETE";
    }
    return "UNKNOWN";
}

std::vector<std::string> validate_record(const SessionRecord& record, const RatingScale& scale)
{
    std::vector<std::string> out;
    auto in_scale = [&](int r) { return r >= 1 && r <= scale.points; };
    for (std::size_t i = 0; i < record.tasks.size(); ++i) {
        const auto& task = record.tasks[i];
        const std::string where = "tasks[" + std::to_string(i) + "]";
        const std::size_t expected =
            task.display_order.size() - (task.is_attention ? 1u : 0u);
        if (task.ratings.size() != expected) {
            out.push_back(where + ".ratings: expected " + std::to_string(expected) +
                          " ratings, got " + std::to_string(task.ratings.size()));
        }
        for (const auto& [system, rating] : task.ratings) {
            if (!in_scale(rating)) {
                out.push_back(where + ".ratings." + system + ": rating out of scale");
            }
        }
        if (task.is_attention != task.attention_slot.has_value()) {
            out.push_back(where + ".attention_slot: present iff is_attention");
        }
        if (task.attention_rating && !in_scale(*task.attention_rating)) {
            out.push_back(where + ".attention_rating: rating out of scale");
        }
        if (std::any_of(task.per_event_times_ms.begin(), task.per_event_times_ms.end(),
                        [](std::int64_t t) { return t < 0; }) ||
            task.task_total_ms < 0) {
            out.push_back(where + ".per_event_times_ms: timings must be non-negative");
        }
    }
    if (record.total_duration_ms < 0) {
        out.push_back("total_duration_ms: must be non-negative");
    }
    if (record.reliability.discarded == false && !record.reliability.attention_passed) {
        out.push_back("reliability: failed attention check must be discarded");
    }
    return out;
}

} // namespace crseval
