#pragma once

// Statistics over exported study data. Callers filter first
// (apply_discard_policy) and pass only kept records, unless they explicitly
// ask for discarded data to be included.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crseval/export.hpp"
#include "crseval/model.hpp"

namespace crseval {

struct SystemSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;                      // population standard deviation
    std::vector<std::size_t> histogram;   // index p-1 counts rating p

    friend bool operator==(const SystemSummary&, const SystemSummary&) = default;
};

/// Per-system summaries over all non-attention ratings. Systems listed in
/// `systems` but never rated get an n = 0 summary.
std::map<std::string, SystemSummary> system_rating_summary(std::span<const SessionRecord> records,
                                                           const RatingScale& scale,
                                                           std::span<const std::string> systems = {});

/// One-way random-effects ICC(1) for a balanced participants x ratings matrix:
///   (MSB - MSW) / (MSB + (k - 1) MSW).
/// Throws UnbalancedGroups for ragged rows, DegenerateData for fewer than two
/// participants, fewer than two ratings each, or all-identical values.
double icc_oneway(const std::vector<std::vector<double>>& matrix);

/// Per-participant rating vectors (non-attention ratings, task order, display
/// slot order within a task), one row per record.
std::vector<std::vector<double>> rating_matrix(std::span<const SessionRecord> records);

struct ItemDistribution {
    std::string item_id;
    QuestionKind kind = QuestionKind::Likert5;
    std::map<std::string, std::size_t> counts; // Likert: "1".."5"; choice: option text
    std::optional<double> mean;                // Likert only, when answered at least once
    std::vector<std::string> texts;            // free text, verbatim

    friend bool operator==(const ItemDistribution&, const ItemDistribution&) = default;
};

std::vector<ItemDistribution> questionnaire_summary(std::span<const SessionRecord> records,
                                                    std::span<const QuestionnaireItem> items);

struct WorkerCounts {
    std::size_t kept = 0;
    std::size_t discarded = 0;
    std::size_t flagged = 0; // distinct workers with any implicit flag
};

struct StudyStats {
    std::map<std::string, SystemSummary> systems;
    std::optional<double> icc;
    std::string icc_note; // why icc is absent, if it is
    std::vector<ItemDistribution> questionnaire;
    std::vector<ItemDistribution> demographics;
    WorkerCounts workers;
};

struct AnalysisOptions {
    bool include_discarded = false;
    std::optional<ImplicitThresholds> thresholds; // re-flag records when set
};

/// Reliability filtering followed by every summary.
StudyStats analyze(const ExportDocument& document, const AnalysisOptions& options = {});

/// Records after re-assessment and filtering according to the options.
std::vector<SessionRecord> filtered_records(const ExportDocument& document,
                                            const AnalysisOptions& options);

Json stats_to_json(const StudyStats& stats, const RatingScale& scale);

// CSV output (RFC 4180 quoting, CRLF-free "\n" line ends, stable columns).

std::string csv_escape(const std::string& field);

/// Long format, one row per non-attention rating:
/// worker_id,session_id,task_index,situation_id,system_id,rating,slot,
/// task_total_ms,per_event_times_ms,flags,discarded
void write_ratings_csv(std::ostream& out, std::span<const SessionRecord> records);
void write_summary_csv(std::ostream& out, const std::map<std::string, SystemSummary>& summaries,
                       const RatingScale& scale);
void write_questionnaire_csv(std::ostream& out, const std::vector<ItemDistribution>& questionnaire,
                             const std::vector<ItemDistribution>& demographics);

} // namespace crseval
