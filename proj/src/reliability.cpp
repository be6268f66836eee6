#include "crseval/reliability.hpp"

#include <algorithm>

#include "crseval/error.hpp"

namespace crseval {

bool check_explicit_attention(const SessionRecord& record, const Study& study)
{
    if (study.attention_checks_per_session == 0) {
        return true;
    }
    bool passed = true;
    bool seen = false;
    for (const auto& task : record.tasks) {
        if (!task.is_attention) continue;
        seen = true;
        if (!task.attention_rating) {
            throw Error(ErrorCode::MissingAttentionRating,
                        "session " + record.session_id + " task " + std::to_string(task.task_index) +
                            " is an attention check without a rating");
        }
        passed = passed && *task.attention_rating == study.attention_required_rating;
    }
    if (!seen) {
        throw Error(ErrorCode::MissingAttentionRating,
                    "session " + record.session_id + " holds no attention task");
    }
    return passed;
}

std::set<ImplicitFlag> compute_implicit_flags(const SessionRecord& record,
                                              const ImplicitThresholds& t)
{
    std::set<ImplicitFlag> flags;
    for (const auto& task : record.tasks) {
        if (std::any_of(task.per_event_times_ms.begin(), task.per_event_times_ms.end(),
                        [&](std::int64_t ms) { return ms < t.min_event_ms; })) {
            flags.insert(ImplicitFlag::EventTooFast);
        }
        if (task.task_total_ms < t.min_task_ms) {
            flags.insert(ImplicitFlag::TaskTooFast);
        }
    }
    if (record.total_duration_ms < t.min_total_ms) {
        flags.insert(ImplicitFlag::TotalTooFast);
    }
    if (record.total_duration_ms > t.max_total_ms) {
        flags.insert(ImplicitFlag::TotalTooSlow);
    }
    return flags;
}

SessionRecord assess_record(SessionRecord record, const Study& study)
{
    return assess_record(std::move(record), study, study.implicit_thresholds);
}

SessionRecord assess_record(SessionRecord record, const Study& study,
                            const ImplicitThresholds& thresholds)
{
    auto& v = record.reliability;
    v.attention_passed = check_explicit_attention(record, study);
    v.implicit_flags = compute_implicit_flags(record, thresholds);
    v.discarded = !v.attention_passed;
    return record;
}

Partition apply_discard_policy(std::vector<SessionRecord> records, const Study& study)
{
    std::set<std::string> failing;
    for (auto& record : records) {
        bool passed;
        try {
            passed = check_explicit_attention(record, study);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MissingAttentionRating) throw;
            passed = false;
        }
        record.reliability.attention_passed = passed;
        if (!passed) failing.insert(record.worker_id);
    }
    Partition out;
    for (auto& record : records) {
        record.reliability.discarded = failing.contains(record.worker_id);
        (record.reliability.discarded ? out.discarded : out.kept).push_back(std::move(record));
    }
    return out;
}

} // namespace crseval
