#pragma once

// Participant sessions: sampling, response-order randomization, attention
// check placement and the monotone workflow
//   LANDING -> INSTRUCTIONS -> TASK(0) .. TASK(n-1) -> QUESTIONNAIRE -> COMPLETE.
//
// Every transition function takes the session by value and returns the
// successor, or throws Error(WrongState, ...) without side effects.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crseval/ingestion.hpp"
#include "crseval/model.hpp"
#include "crseval/rng.hpp"

namespace crseval {

inline constexpr const char* kAttentionSystemId = "ATTENTION";

struct RenderedResponse {
    int slot = 0;
    std::string system_id; // kAttentionSystemId for the attention instruction
    std::string text;

    bool is_attention() const { return system_id == kAttentionSystemId; }
    friend bool operator==(const RenderedResponse&, const RenderedResponse&) = default;
};

struct TaskPage {
    int task_index = 0;
    int task_count = 0;
    DialogSituation situation;
    std::vector<RenderedResponse> ordered_responses;
    RatingScale scale;
};

/// Seed used for a worker's session: the study seed mixed with a stable hash
/// of the worker id.
std::uint64_t session_seed(const Study& study, std::string_view worker_id);

Session create_session(const Study& study, const SituationPool& pool, std::string_view worker_id,
                       std::uint64_t seed, std::string session_id = {}, TimestampMs created_at = 0);

/// LANDING -> INSTRUCTIONS.
Session show_instructions(Session session);
/// INSTRUCTIONS -> TASK(0).
Session acknowledge_instructions(Session session);

std::string attention_instruction(const Study& study);

TaskPage render_task(const Session& session, int task_index, const SituationPool& pool,
                     const Study& study);

/// ratings maps display slot -> rating; every slot (including an attention
/// slot) must be rated. Timings are the client-reported per-event intervals.
Session submit_task(Session session, int task_index, const std::map<int, int>& ratings,
                    const std::vector<std::int64_t>& timings_ms, const Study& study,
                    const SituationPool& pool,
                    std::optional<std::int64_t> server_elapsed_ms = std::nullopt);

/// Validates answers against the study's questionnaire and demographics
/// items; throws MissingAnswer / InvalidOption on the first offending item.
void validate_answers(const Study& study, const std::map<std::string, Answer>& answers);

Session submit_questionnaire(Session session, const std::map<std::string, Answer>& answers,
                             const Study& study, TimestampMs completed_at = 0,
                             int hit_code_attempt = 0);

/// 8 characters from [A-Z0-9]. 36^8 ~ 2.8e12 codes, so n codes collide with
/// probability about n^2 / 5.6e12 (0.18% at 100,000 codes); the store rejects
/// duplicates and the caller retries with the next attempt number.
std::string generate_hit_code(Rng& rng);

/// Hit code for a session and retry attempt; deterministic in both.
std::string session_hit_code(std::uint64_t seed, int attempt);

/// Re-derives the session from its seed and accepted event log.
Session replay_session(const Study& study, const SituationPool& pool, std::string_view worker_id,
                       std::uint64_t seed, std::string session_id, TimestampMs created_at,
                       const std::vector<SessionEvent>& events);

/// Snapshot of a COMPLETE session as a persistable record. The reliability
/// verdict is left at its default; see assess_record().
SessionRecord to_record(const Session& session);

/// Invariant check for assignments: distinct situations, attention count,
/// valid permutations.
std::vector<std::string> validate_session(const Session& session, const Study& study);

} // namespace crseval
