#pragma once

// Fixture builders shared by the unit, integration and acceptance suites.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crseval/ingestion.hpp"
#include "crseval/model.hpp"
#include "crseval/reliability.hpp"
#include "crseval/rng.hpp"
#include "crseval/session.hpp"

namespace crseval::testing {

inline std::string system_name(int i)
{
    return "sys_" + std::string(1, static_cast<char>('a' + i));
}

/// n situations, each from its own source dialog, each with `systems` responses.
inline SituationPool synthetic_pool(std::size_t n, int systems = 3, std::uint64_t seed = 1)
{
    static const char* titles[] = {"Up (2009)", "Heat (1995)", "Coco (2017)", "Alien (1979)",
                                   "The Matrix (1999)"};
    Rng rng(seed);
    SituationPool pool;
    for (std::size_t i = 0; i < n; ++i) {
        Dialog d;
        d.dialog_id = "dlg-" + std::to_string(i);
        const int turns = 1 + 2 * static_cast<int>(rng.uniform(3)); // odd: ends with SEEKER
        for (int t = 0; t < turns; ++t) {
            const auto speaker = t % 2 == 0 ? Speaker::Seeker : Speaker::Recommender;
            std::string text = speaker == Speaker::Seeker
                                   ? "I liked \"" + std::string(titles[rng.uniform(5)]) + "\", any tips?"
                                   : "Have you seen \"" + std::string(titles[rng.uniform(5)]) + "\"?";
            d.utterances.push_back({speaker, text, t});
        }
        auto s = truncate_to_situation(d, turns - 1);
        for (int k = 0; k < systems; ++k) {
            s.responses[system_name(k)] =
                "Response " + std::to_string(k) + " to " + d.dialog_id + ": try \"" +
                std::string(titles[rng.uniform(5)]) + "\".";
        }
        pool.situations.push_back(std::move(s));
    }
    return pool;
}

/// Rating chosen for a (task, system) pair; attention slots are handled separately.
using RatingFn = std::function<int(int task_index, const std::string& system_id)>;

struct DriveOptions {
    bool pass_attention = true;
    std::vector<std::int64_t> timings{1200, 900, 1500, 800};
    TimestampMs created_at = 1'700'000'000'000;
    TimestampMs completed_at = 1'700'000'600'000;
};

inline std::map<std::string, Answer> default_answers(const Study& study)
{
    std::map<std::string, Answer> answers;
    for (const auto& item : study.questionnaire) {
        if (item.kind == QuestionKind::Likert5) answers[item.item_id] = std::int64_t{4};
    }
    for (const auto& item : study.demographics) {
        if (item.kind == QuestionKind::SingleChoice) answers[item.item_id] = item.options.front();
    }
    return answers;
}

/// Runs a session through the whole workflow with the engine functions.
inline Session drive_session(const Study& study, const SituationPool& pool, const std::string& worker,
                             std::uint64_t seed, const RatingFn& rate, const DriveOptions& opt = {})
{
    Session s = create_session(study, pool, worker, seed, "sess-" + worker + "-" + std::to_string(seed),
                               opt.created_at);
    s = show_instructions(std::move(s));
    s = acknowledge_instructions(std::move(s));
    for (int k = 0; k < static_cast<int>(s.tasks.size()); ++k) {
        const auto page = render_task(s, k, pool, study);
        std::map<int, int> ratings;
        for (const auto& r : page.ordered_responses) {
            if (r.is_attention()) {
                const int required = study.attention_required_rating;
                ratings[r.slot] = opt.pass_attention ? required : (required % study.scale.points) + 1;
            } else {
                ratings[r.slot] = rate(k, r.system_id);
            }
        }
        s = submit_task(std::move(s), k, ratings, opt.timings, study, pool);
    }
    return submit_questionnaire(std::move(s), default_answers(study), study, opt.completed_at);
}

inline SessionRecord drive_record(const Study& study, const SituationPool& pool, const std::string& worker,
                                  std::uint64_t seed, const RatingFn& rate, const DriveOptions& opt = {})
{
    return assess_record(to_record(drive_session(study, pool, worker, seed, rate, opt)), study);
}

} // namespace crseval::testing
