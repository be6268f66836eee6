#include "crseval/session.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "crseval/error.hpp"

namespace crseval {

namespace {

constexpr std::uint64_t kHitCodeSalt = 0x68697463'6f646521ULL; // "hitcode!"

void require_state(const Session& session, SessionState expected)
{
    if (session.state != expected) {
        throw Error(ErrorCode::WrongState, "session " + session.session_id + " is in state " +
                                               to_string(session.state) + ", expected " +
                                               to_string(expected));
    }
}

const DialogSituation& situation_for(const SituationPool& pool, const std::string& situation_id)
{
    const DialogSituation* s = pool.find(situation_id);
    if (s == nullptr) {
        throw Error(ErrorCode::UnknownSituation, "situation " + situation_id + " is not in the pool");
    }
    return *s;
}

} // namespace

std::uint64_t session_seed(const Study& study, std::string_view worker_id)
{
    return mix_seed(study.rng_seed, fnv1a64(worker_id));
}

Session create_session(const Study& study, const SituationPool& pool, std::string_view worker_id,
                       std::uint64_t seed, std::string session_id, TimestampMs created_at)
{
    if (auto violations = validate_study(study); !violations.empty()) {
        throw Error(ErrorCode::InvalidArgument, "invalid study: " + violations.front());
    }
    const auto n = static_cast<std::size_t>(study.situations_per_session);
    const auto systems = study.systems_per_situation;
    if (pool.size() < n) {
        throw Error(ErrorCode::PoolTooSmall, "pool holds " + std::to_string(pool.size()) +
                                                 " situations, sessions need " + std::to_string(n));
    }

    Rng rng(seed);

    // Uniform sample without replacement, at most one situation per source dialog.
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    std::vector<std::size_t> chosen;
    std::set<std::string_view> dialogs;
    for (std::size_t idx : order) {
        if (chosen.size() == n) break;
        if (dialogs.insert(pool.situations[idx].source_dialog_id).second) {
            chosen.push_back(idx);
        }
    }
    if (chosen.size() < n) {
        throw Error(ErrorCode::PoolTooSmall,
                    "pool covers " + std::to_string(dialogs.size()) +
                        " distinct source dialogs, sessions need " + std::to_string(n));
    }

    Session session;
    session.session_id = std::move(session_id);
    session.study_id = study.study_id;
    session.worker_id = std::string(worker_id);
    session.seed = seed;
    session.created_at = created_at;
    session.state = SessionState{Phase::Landing, 0};

    for (std::size_t idx : chosen) {
        const auto& situation = pool.situations[idx];
        if (static_cast<int>(situation.responses.size()) != systems) {
            throw Error(ErrorCode::InvariantViolation,
                        "situation " + situation.situation_id + " has " +
                            std::to_string(situation.responses.size()) + " responses, study expects " +
                            std::to_string(systems));
        }
        TaskAssignment task;
        task.situation_id = situation.situation_id;
        task.display_order.resize(static_cast<std::size_t>(systems));
        std::iota(task.display_order.begin(), task.display_order.end(), 0);
        rng.shuffle(std::span(task.display_order));
        session.tasks.push_back(std::move(task));
    }

    std::vector<std::size_t> task_indices(n);
    std::iota(task_indices.begin(), task_indices.end(), std::size_t{0});
    const auto checks = static_cast<std::size_t>(study.attention_checks_per_session);
    // Partial Fisher-Yates: the first `checks` entries form a uniform subset.
    for (std::size_t i = 0; i < checks; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.uniform(n - i));
        std::swap(task_indices[i], task_indices[j]);
        auto& task = session.tasks[task_indices[i]];
        task.is_attention = true;
        task.attention_slot = static_cast<int>(rng.uniform(static_cast<std::uint64_t>(systems)));
    }
    return session;
}

Session show_instructions(Session session)
{
    require_state(session, SessionState{Phase::Landing, 0});
    session.state = SessionState{Phase::Instructions, 0};
    session.events.emplace_back(ShowInstructionsEvent{});
    return session;
}

Session acknowledge_instructions(Session session)
{
    require_state(session, SessionState{Phase::Instructions, 0});
    session.state = SessionState::task(0);
    session.events.emplace_back(AckInstructionsEvent{});
    return session;
}

std::string attention_instruction(const Study& study)
{
    const auto& label = study.scale.labels.at(static_cast<std::size_t>(study.attention_required_rating - 1));
    return "Please select '" + label + "' for this response.";
}

TaskPage render_task(const Session& session, int task_index, const SituationPool& pool,
                     const Study& study)
{
    require_state(session, SessionState::task(task_index));
    const auto& task = session.tasks.at(static_cast<std::size_t>(task_index));
    const auto& situation = situation_for(pool, task.situation_id);
    const auto systems = situation.system_ids();

    TaskPage page;
    page.task_index = task_index;
    page.task_count = static_cast<int>(session.tasks.size());
    page.situation = situation;
    page.scale = study.scale;
    for (std::size_t slot = 0; slot < task.display_order.size(); ++slot) {
        RenderedResponse r;
        r.slot = static_cast<int>(slot);
        if (task.attention_slot && *task.attention_slot == r.slot) {
            r.system_id = kAttentionSystemId;
            r.text = attention_instruction(study);
        } else {
            r.system_id = systems.at(static_cast<std::size_t>(task.display_order[slot]));
            r.text = situation.responses.at(r.system_id);
        }
        page.ordered_responses.push_back(std::move(r));
    }
    return page;
}

Session submit_task(Session session, int task_index, const std::map<int, int>& ratings,
                    const std::vector<std::int64_t>& timings_ms, const Study& study,
                    const SituationPool& pool, std::optional<std::int64_t> server_elapsed_ms)
{
    require_state(session, SessionState::task(task_index));
    const auto& task = session.tasks.at(static_cast<std::size_t>(task_index));
    const auto& situation = situation_for(pool, task.situation_id);
    const auto systems = situation.system_ids();
    const int slots = static_cast<int>(task.display_order.size());

    for (const auto& [slot, rating] : ratings) {
        if (slot < 0 || slot >= slots) {
            throw Error(ErrorCode::MissingRating, "rating given for unknown slot " + std::to_string(slot));
        }
        if (rating < 1 || rating > study.scale.points) {
            throw Error(ErrorCode::RatingOutOfRange,
                        "rating " + std::to_string(rating) + " for slot " + std::to_string(slot) +
                            " outside [1, " + std::to_string(study.scale.points) + "]");
        }
    }
    for (int slot = 0; slot < slots; ++slot) {
        if (!ratings.contains(slot)) {
            throw Error(ErrorCode::MissingRating, "slot " + std::to_string(slot) + " is not rated");
        }
    }
    if (std::any_of(timings_ms.begin(), timings_ms.end(), [](std::int64_t t) { return t < 0; })) {
        throw Error(ErrorCode::InvalidArgument, "event timings must be non-negative");
    }

    TaskResult result;
    result.task_index = task_index;
    result.situation_id = task.situation_id;
    result.system_ids = systems;
    result.display_order = task.display_order;
    result.is_attention = task.is_attention;
    result.attention_slot = task.attention_slot;
    for (const auto& [slot, rating] : ratings) {
        if (task.attention_slot && *task.attention_slot == slot) {
            result.attention_rating = rating;
        } else {
            result.ratings[systems.at(static_cast<std::size_t>(task.display_order[slot]))] = rating;
        }
    }
    result.per_event_times_ms = timings_ms;
    const std::int64_t client_total = std::accumulate(timings_ms.begin(), timings_ms.end(), std::int64_t{0});
    // Client intervals cannot claim more time than the server observed.
    result.task_total_ms = server_elapsed_ms ? std::min(client_total, *server_elapsed_ms) : client_total;
    result.server_elapsed_ms = server_elapsed_ms;
    session.results.push_back(std::move(result));

    session.events.emplace_back(SubmitTaskEvent{task_index, ratings, timings_ms, server_elapsed_ms});
    session.state = task_index + 1 < static_cast<int>(session.tasks.size())
                        ? SessionState::task(task_index + 1)
                        : SessionState{Phase::Questionnaire, 0};
    return session;
}

void validate_answers(const Study& study, const std::map<std::string, Answer>& answers)
{
    std::set<std::string> known;
    auto check = [&](const QuestionnaireItem& item) {
        known.insert(item.item_id);
        auto it = answers.find(item.item_id);
        if (it == answers.end()) {
            if (item.kind != QuestionKind::FreeText) {
                throw Error(ErrorCode::MissingAnswer, "item '" + item.item_id + "' is not answered");
            }
            return;
        }
        const Answer& a = it->second;
        switch (item.kind) {
        case QuestionKind::Likert5: {
            const auto* v = std::get_if<std::int64_t>(&a);
            if (v == nullptr || *v < 1 || *v > 5) {
                throw Error(ErrorCode::InvalidOption,
                            "item '" + item.item_id + "' expects an integer in [1, 5]");
            }
            break;
        }
        case QuestionKind::SingleChoice: {
            const auto* v = std::get_if<std::string>(&a);
            if (v == nullptr ||
                std::find(item.options.begin(), item.options.end(), *v) == item.options.end()) {
                throw Error(ErrorCode::InvalidOption,
                            "item '" + item.item_id + "' answer is not one of its options");
            }
            break;
        }
        case QuestionKind::FreeText:
            if (!std::holds_alternative<std::string>(a)) {
                throw Error(ErrorCode::InvalidOption, "item '" + item.item_id + "' expects text");
            }
            break;
        }
    };
    for (const auto& item : study.questionnaire) check(item);
    for (const auto& item : study.demographics) check(item);
    for (const auto& [id, a] : answers) {
        if (!known.contains(id)) {
            throw Error(ErrorCode::InvalidOption, "answer for unknown item '" + id + "'");
        }
    }
}

Session submit_questionnaire(Session session, const std::map<std::string, Answer>& answers,
                             const Study& study, TimestampMs completed_at, int hit_code_attempt)
{
    require_state(session, SessionState{Phase::Questionnaire, 0});
    validate_answers(study, answers);
    session.questionnaire_answers = answers;
    session.completed_at = completed_at;
    session.hit_code = session_hit_code(session.seed, hit_code_attempt);
    session.state = SessionState{Phase::Complete, 0};
    session.events.emplace_back(SubmitQuestionnaireEvent{answers, completed_at, hit_code_attempt});
    return session;
}

std::string generate_hit_code(Rng& rng)
{
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::string code(8, ' ');
    for (auto& c : code) {
        c = kAlphabet[rng.uniform(36)];
    }
    return code;
}

std::string session_hit_code(std::uint64_t seed, int attempt)
{
    Rng rng(mix_seed(seed ^ kHitCodeSalt, static_cast<std::uint64_t>(attempt)));
    return generate_hit_code(rng);
}

Session replay_session(const Study& study, const SituationPool& pool, std::string_view worker_id,
                       std::uint64_t seed, std::string session_id, TimestampMs created_at,
                       const std::vector<SessionEvent>& events)
{
    Session session = create_session(study, pool, worker_id, seed, std::move(session_id), created_at);
    for (const auto& event : events) {
        session = std::visit(
            [&](const auto& e) -> Session {
                using E = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<E, ShowInstructionsEvent>) {
                    return show_instructions(std::move(session));
                } else if constexpr (std::is_same_v<E, AckInstructionsEvent>) {
                    return acknowledge_instructions(std::move(session));
                } else if constexpr (std::is_same_v<E, SubmitTaskEvent>) {
                    return submit_task(std::move(session), e.task_index, e.ratings, e.timings_ms,
                                       study, pool, e.server_elapsed_ms);
                } else {
                    return submit_questionnaire(std::move(session), e.answers, study,
                                                e.completed_at, e.hit_code_attempt);
                }
            },
            event);
    }
    return session;
}

SessionRecord to_record(const Session& session)
{
    require_state(session, SessionState{Phase::Complete, 0});
    SessionRecord record;
    record.study_id = session.study_id;
    record.session_id = session.session_id;
    record.worker_id = session.worker_id;
    record.hit_code = session.hit_code.value_or("");
    record.session_seed = session.seed;
    record.created_at = session.created_at;
    record.completed_at = session.completed_at.value_or(session.created_at);
    record.tasks = session.results;
    record.questionnaire_answers = session.questionnaire_answers;
    record.total_duration_ms = std::max<std::int64_t>(0, record.completed_at - record.created_at);
    record.events = session.events;
    return record;
}

std::vector<std::string> validate_session(const Session& session, const Study& study)
{
    std::vector<std::string> out;
    if (static_cast<int>(session.tasks.size()) != study.situations_per_session) {
        out.push_back("tasks: expected " + std::to_string(study.situations_per_session) + " tasks");
    }
    std::set<std::string> ids;
    int attention = 0;
    for (std::size_t i = 0; i < session.tasks.size(); ++i) {
        const auto& task = session.tasks[i];
        const std::string where = "tasks[" + std::to_string(i) + "]";
        if (!ids.insert(task.situation_id).second) {
            out.push_back(where + ".situation_id: repeated situation");
        }
        std::vector<int> sorted = task.display_order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> identity(static_cast<std::size_t>(study.systems_per_situation));
        std::iota(identity.begin(), identity.end(), 0);
        if (sorted != identity) {
            out.push_back(where + ".display_order: not a permutation");
        }
        if (task.is_attention) {
            ++attention;
            if (!task.attention_slot || *task.attention_slot < 0 ||
                *task.attention_slot >= study.systems_per_situation) {
                out.push_back(where + ".attention_slot: missing or out of range");
            }
        } else if (task.attention_slot) {
            out.push_back(where + ".attention_slot: set on a regular task");
        }
    }
    if (attention != study.attention_checks_per_session) {
        out.push_back("tasks: expected " + std::to_string(study.attention_checks_per_session) +
                      " attention tasks, found " + std::to_string(attention));
    }
    return out;
}

} // namespace crseval
