#include "crseval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "crseval/error.hpp"
#include "crseval/reliability.hpp"

namespace crseval {

namespace {

SystemSummary summarize(std::vector<int> values, int points)
{
    SystemSummary s;
    s.histogram.assign(static_cast<std::size_t>(points), 0);
    s.n = values.size();
    for (int v : values) {
        if (v >= 1 && v <= points) ++s.histogram[static_cast<std::size_t>(v - 1)];
    }
    if (values.empty()) {
        return s;
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (int v : values) sum += v;
    s.mean = sum / n;
    double ss = 0.0;
    for (int v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / n);
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
    return s;
}

int slot_of(const TaskResult& task, const std::string& system_id)
{
    auto it = std::find(task.system_ids.begin(), task.system_ids.end(), system_id);
    if (it == task.system_ids.end()) return -1;
    const int index = static_cast<int>(it - task.system_ids.begin());
    auto pos = std::find(task.display_order.begin(), task.display_order.end(), index);
    return pos == task.display_order.end() ? -1 : static_cast<int>(pos - task.display_order.begin());
}

std::string join(const std::vector<std::string>& parts, char sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

std::string format_double(double v)
{
    Json j = v; // shortest round-trip representation
    return j.dump();
}

} // namespace

std::map<std::string, SystemSummary> system_rating_summary(std::span<const SessionRecord> records,
                                                           const RatingScale& scale,
                                                           std::span<const std::string> systems)
{
    std::map<std::string, std::vector<int>> values;
    for (const auto& id : systems) values[id];
    for (const auto& record : records) {
        for (const auto& task : record.tasks) {
            for (const auto& [system, rating] : task.ratings) {
                values[system].push_back(rating);
            }
        }
    }
    std::map<std::string, SystemSummary> out;
    for (auto& [system, v] : values) {
        out.emplace(system, summarize(std::move(v), scale.points));
    }
    return out;
}

double icc_oneway(const std::vector<std::vector<double>>& matrix)
{
    const std::size_t groups = matrix.size();
    if (groups < 2) {
        throw Error(ErrorCode::DegenerateData, "ICC needs at least two participants");
    }
    const std::size_t k = matrix.front().size();
    for (const auto& row : matrix) {
        if (row.size() != k) {
            throw Error(ErrorCode::UnbalancedGroups,
                        "ICC(1) requires every participant to contribute the same number of ratings");
        }
    }
    if (k < 2) {
        throw Error(ErrorCode::DegenerateData, "ICC needs at least two ratings per participant");
    }
    const double first = matrix.front().front();
    const bool all_same = std::all_of(matrix.begin(), matrix.end(), [&](const auto& row) {
        return std::all_of(row.begin(), row.end(), [&](double x) { return x == first; });
    });
    if (all_same) {
        throw Error(ErrorCode::DegenerateData, "all ratings are identical; ICC is undefined");
    }

    std::vector<double> means(groups);
    double grand = 0.0;
    for (std::size_t i = 0; i < groups; ++i) {
        means[i] = std::accumulate(matrix[i].begin(), matrix[i].end(), 0.0) / static_cast<double>(k);
        grand += means[i];
    }
    grand /= static_cast<double>(groups);

    double ssb = 0.0;
    double ssw = 0.0;
    for (std::size_t i = 0; i < groups; ++i) {
        ssb += (means[i] - grand) * (means[i] - grand);
        for (double x : matrix[i]) ssw += (x - means[i]) * (x - means[i]);
    }
    ssb *= static_cast<double>(k);

    const double msb = ssb / static_cast<double>(groups - 1);
    const double msw = ssw / static_cast<double>(groups * (k - 1));
    return (msb - msw) / (msb + static_cast<double>(k - 1) * msw);
}

std::vector<std::vector<double>> rating_matrix(std::span<const SessionRecord> records)
{
    std::vector<std::vector<double>> matrix;
    matrix.reserve(records.size());
    for (const auto& record : records) {
        std::vector<double> row;
        for (const auto& task : record.tasks) {
            std::vector<std::pair<int, int>> by_slot; // (slot, rating)
            for (const auto& [system, rating] : task.ratings) {
                by_slot.emplace_back(slot_of(task, system), rating);
            }
            std::sort(by_slot.begin(), by_slot.end());
            for (const auto& [slot, rating] : by_slot) row.push_back(rating);
        }
        matrix.push_back(std::move(row));
    }
    return matrix;
}

std::vector<ItemDistribution> questionnaire_summary(std::span<const SessionRecord> records,
                                                    std::span<const QuestionnaireItem> items)
{
    std::vector<ItemDistribution> out;
    for (const auto& item : items) {
        ItemDistribution d;
        d.item_id = item.item_id;
        d.kind = item.kind;
        if (item.kind == QuestionKind::SingleChoice) {
            for (const auto& option : item.options) d.counts[option] = 0;
        }
        std::int64_t sum = 0;
        std::size_t answered = 0;
        for (const auto& record : records) {
            auto it = record.questionnaire_answers.find(item.item_id);
            if (it == record.questionnaire_answers.end()) continue;
            switch (item.kind) {
            case QuestionKind::Likert5:
                if (const auto* v = std::get_if<std::int64_t>(&it->second)) {
                    ++d.counts[std::to_string(*v)];
                    sum += *v;
                    ++answered;
                }
                break;
            case QuestionKind::SingleChoice:
                if (const auto* v = std::get_if<std::string>(&it->second)) ++d.counts[*v];
                break;
            case QuestionKind::FreeText:
                if (const auto* v = std::get_if<std::string>(&it->second)) d.texts.push_back(*v);
                break;
            }
        }
        if (item.kind == QuestionKind::Likert5 && answered > 0) {
            d.mean = static_cast<double>(sum) / static_cast<double>(answered);
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<SessionRecord> filtered_records(const ExportDocument& document,
                                            const AnalysisOptions& options)
{
    std::vector<SessionRecord> records = document.records;
    if (options.thresholds) {
        for (auto& r : records) {
            r.reliability.implicit_flags = compute_implicit_flags(r, *options.thresholds);
        }
    }
    auto partition = apply_discard_policy(std::move(records), document.study);
    if (!options.include_discarded) {
        return std::move(partition.kept);
    }
    // Preserve export order when returning everything.
    std::vector<SessionRecord> all;
    std::map<std::string, SessionRecord*> by_session;
    for (auto& r : partition.kept) by_session[r.session_id] = &r;
    for (auto& r : partition.discarded) by_session[r.session_id] = &r;
    for (const auto& original : document.records) {
        all.push_back(std::move(*by_session.at(original.session_id)));
    }
    return all;
}

StudyStats analyze(const ExportDocument& document, const AnalysisOptions& options)
{
    AnalysisOptions all = options;
    all.include_discarded = true;
    const auto everything = filtered_records(document, all);

    std::vector<SessionRecord> used;
    std::set<std::string> kept_workers;
    std::set<std::string> discarded_workers;
    std::set<std::string> flagged_workers;
    for (const auto& r : everything) {
        (r.reliability.discarded ? discarded_workers : kept_workers).insert(r.worker_id);
        if (!r.reliability.implicit_flags.empty()) flagged_workers.insert(r.worker_id);
        if (options.include_discarded || !r.reliability.discarded) used.push_back(r);
    }

    std::set<std::string> systems;
    for (const auto& r : document.records) {
        for (const auto& t : r.tasks) systems.insert(t.system_ids.begin(), t.system_ids.end());
    }
    for (const auto& [id, s] : document.situations) {
        for (const auto& [system, text] : s.responses) systems.insert(system);
    }
    const std::vector<std::string> system_list(systems.begin(), systems.end());

    StudyStats stats;
    stats.systems = system_rating_summary(used, document.study.scale, system_list);
    try {
        stats.icc = icc_oneway(rating_matrix(used));
    } catch (const Error& e) {
        stats.icc_note = e.what();
    }
    stats.questionnaire = questionnaire_summary(used, document.study.questionnaire);
    stats.demographics = questionnaire_summary(used, document.study.demographics);
    stats.workers.kept = kept_workers.size();
    stats.workers.discarded = discarded_workers.size();
    stats.workers.flagged = flagged_workers.size();
    return stats;
}

Json stats_to_json(const StudyStats& stats, const RatingScale& scale)
{
    Json systems = Json::object();
    for (const auto& [id, s] : stats.systems) {
        Json hist = Json::object();
        for (std::size_t p = 0; p < s.histogram.size(); ++p) {
            hist[std::to_string(p + 1)] = s.histogram[p];
        }
        systems[id] = Json{{"n", s.n},
                           {"mean", s.mean},
                           {"median", s.median},
                           {"sd_population", s.sd},
                           {"histogram", hist}};
    }
    auto items = [](const std::vector<ItemDistribution>& list) {
        Json out = Json::array();
        for (const auto& d : list) {
            Json item{{"item_id", d.item_id}, {"kind", to_string(d.kind)}};
            if (d.kind == QuestionKind::FreeText) {
                item["texts"] = d.texts;
            } else {
                item["counts"] = d.counts;
            }
            if (d.kind == QuestionKind::Likert5) {
                item["mean"] = d.mean ? Json(*d.mean) : Json(nullptr);
            }
            out.push_back(std::move(item));
        }
        return out;
    };
    Json out{{"scale_points", scale.points},
             {"systems", systems},
             {"icc", stats.icc ? Json(*stats.icc) : Json(nullptr)},
             {"questionnaire", items(stats.questionnaire)},
             {"demographics", items(stats.demographics)},
             {"workers",
              Json{{"kept", stats.workers.kept},
                   {"discarded", stats.workers.discarded},
                   {"flagged", stats.workers.flagged}}}};
    if (!stats.icc) out["icc_note"] = stats.icc_note;
    return out;
}

std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_ratings_csv(std::ostream& out, std::span<const SessionRecord> records)
{
    out << "worker_id,session_id,task_index,situation_id,system_id,rating,slot,task_total_ms,"
           "per_event_times_ms,flags,discarded\n";
    for (const auto& record : records) {
        std::vector<std::string> flags;
        for (auto f : record.reliability.implicit_flags) flags.emplace_back(to_string(f));
        const std::string flag_field = join(flags, ';');
        for (const auto& task : record.tasks) {
            std::vector<std::string> times;
            for (auto t : task.per_event_times_ms) times.push_back(std::to_string(t));
            const std::string time_field = join(times, ';');
            for (const auto& [system, rating] : task.ratings) {
                out << csv_escape(record.worker_id) << ',' << csv_escape(record.session_id) << ','
                    << task.task_index << ',' << csv_escape(task.situation_id) << ','
                    << csv_escape(system) << ',' << rating << ',' << slot_of(task, system) << ','
                    << task.task_total_ms << ',' << csv_escape(time_field) << ','
                    << csv_escape(flag_field) << ',' << (record.reliability.discarded ? "true" : "false")
                    << '\n';
            }
        }
    }
}

void write_summary_csv(std::ostream& out, const std::map<std::string, SystemSummary>& summaries,
                       const RatingScale& scale)
{
    out << "system_id,n,mean,median,sd_population";
    for (int p = 1; p <= scale.points; ++p) out << ",count_" << p;
    out << '\n';
    for (const auto& [system, s] : summaries) {
        out << csv_escape(system) << ',' << s.n << ',' << format_double(s.mean) << ','
            << format_double(s.median) << ',' << format_double(s.sd);
        for (int p = 1; p <= scale.points; ++p) {
            const auto idx = static_cast<std::size_t>(p - 1);
            out << ',' << (idx < s.histogram.size() ? s.histogram[idx] : 0);
        }
        out << '\n';
    }
}

void write_questionnaire_csv(std::ostream& out, const std::vector<ItemDistribution>& questionnaire,
                             const std::vector<ItemDistribution>& demographics)
{
    out << "section,item_id,kind,answer,count\n";
    auto emit = [&](const char* section, const std::vector<ItemDistribution>& list) {
        for (const auto& d : list) {
            const std::string kind(to_string(d.kind));
            for (const auto& [answer, count] : d.counts) {
                out << section << ',' << csv_escape(d.item_id) << ',' << kind << ','
                    << csv_escape(answer) << ',' << count << '\n';
            }
            for (const auto& text : d.texts) {
                out << section << ',' << csv_escape(d.item_id) << ',' << kind << ','
                    << csv_escape(text) << ",1\n";
            }
        }
    };
    emit("questionnaire", questionnaire);
    emit("demographics", demographics);
}

} // namespace crseval
