// Batch analysis of study exports.
//
//   crseval-analyze summarize --input export.json [--output-dir DIR]
//   crseval-analyze icc       --input export.json
//   crseval-analyze filter    --input export.json [--output-dir DIR]
//   crseval-analyze csv       --input export.json --output-dir DIR
//
// Common flags: --include-discarded, --thresholds FILE.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "crseval/analysis.hpp"
#include "crseval/error.hpp"
#include "crseval/export.hpp"
#include "crseval/service.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string input;
    std::string output_dir;
    bool include_discarded = false;
    std::string thresholds;
};

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw crseval::Error(crseval::ErrorCode::IoError, "cannot write '" + path.string() + "'");
    }
    return out;
}

void finish(std::ofstream& out, const fs::path& path)
{
    if (!out.flush()) {
        throw crseval::Error(crseval::ErrorCode::IoError, "write failed for '" + path.string() + "'");
    }
}

crseval::AnalysisOptions analysis_options(const Options& o)
{
    crseval::AnalysisOptions a;
    a.include_discarded = o.include_discarded;
    if (!o.thresholds.empty()) a.thresholds = crseval::load_thresholds(o.thresholds);
    return a;
}

void add_common(CLI::App* cmd, Options& o, bool output_required)
{
    cmd->add_option("--input", o.input, "Export document")->required();
    auto* dir = cmd->add_option("--output-dir", o.output_dir, "Directory for output files");
    if (output_required) dir->required();
    cmd->add_flag("--include-discarded", o.include_discarded,
                  "Keep records of workers who failed the attention check");
    cmd->add_option("--thresholds", o.thresholds, "Implicit-check thresholds JSON");
}

int run_summarize(const Options& o)
{
    const auto doc = crseval::load_export(o.input);
    const auto stats = crseval::analyze(doc, analysis_options(o));
    const std::string text = crseval::stats_to_json(stats, doc.study.scale).dump(2) + "\n";
    if (o.output_dir.empty()) {
        std::cout << text;
    } else {
        fs::create_directories(o.output_dir);
        const auto path = fs::path(o.output_dir) / "summary.json";
        auto out = open_output(path);
        out << text;
        finish(out, path);
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

int run_icc(const Options& o)
{
    const auto doc = crseval::load_export(o.input);
    const auto records = crseval::filtered_records(doc, analysis_options(o));
    try {
        const double icc = crseval::icc_oneway(crseval::rating_matrix(records));
        std::cout << std::setprecision(17) << icc << "\n";
    } catch (const crseval::Error& e) {
        std::cerr << "icc undefined [" << crseval::to_string(e.code()) << "]: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

int run_filter(const Options& o)
{
    auto doc = crseval::load_export(o.input);
    doc.records = crseval::filtered_records(doc, analysis_options(o));
    const std::string text = crseval::build_export(doc).dump(2) + "\n";
    if (o.output_dir.empty()) {
        std::cout << text;
    } else {
        fs::create_directories(o.output_dir);
        const auto path = fs::path(o.output_dir) / "filtered_export.json";
        auto out = open_output(path);
        out << text;
        finish(out, path);
        std::cout << "wrote " << path.string() << " (" << doc.records.size() << " records)\n";
    }
    return 0;
}

int run_csv(const Options& o)
{
    const auto doc = crseval::load_export(o.input);
    const auto options = analysis_options(o);
    const auto records = crseval::filtered_records(doc, options);
    const auto stats = crseval::analyze(doc, options);
    fs::create_directories(o.output_dir);

    const auto ratings_path = fs::path(o.output_dir) / "ratings.csv";
    auto ratings = open_output(ratings_path);
    crseval::write_ratings_csv(ratings, records);
    finish(ratings, ratings_path);

    const auto summary_path = fs::path(o.output_dir) / "system_summary.csv";
    auto summary = open_output(summary_path);
    crseval::write_summary_csv(summary, stats.systems, doc.study.scale);
    finish(summary, summary_path);

    const auto q_path = fs::path(o.output_dir) / "questionnaire.csv";
    auto q = open_output(q_path);
    crseval::write_questionnaire_csv(q, stats.questionnaire, stats.demographics);
    finish(q, q_path);

    std::cout << "wrote " << ratings_path.string() << ", " << summary_path.string() << ", "
              << q_path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Statistics over human-evaluation study exports"};
    app.require_subcommand(1);

    Options summarize_opts, icc_opts, filter_opts, csv_opts;
    auto* summarize = app.add_subcommand("summarize", "Per-system summaries, ICC, questionnaire tallies (JSON)");
    add_common(summarize, summarize_opts, false);
    auto* icc = app.add_subcommand("icc", "One-way ICC(1) over per-participant ratings");
    add_common(icc, icc_opts, false);
    auto* filter = app.add_subcommand("filter", "Export document with unreliable workers removed");
    add_common(filter, filter_opts, false);
    auto* csv = app.add_subcommand("csv", "Long-format ratings and summary tables");
    add_common(csv, csv_opts, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*summarize) return run_summarize(summarize_opts);
        if (*icc) return run_icc(icc_opts);
        if (*filter) return run_filter(filter_opts);
        if (*csv) return run_csv(csv_opts);
    } catch (const crseval::Error& e) {
        std::cerr << "error [" << crseval::to_string(e.code()) << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
