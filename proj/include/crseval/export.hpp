#pragma once

// Versioned study export, the contract between the service and the analysis
// tooling. Layout (format_version 1):
//
//   {
//     "format_version": 1,
//     "study":   { ...Study... },
//     "records": [ { ...SessionRecord...,
//                    "tasks": [ { ...TaskResult..., "situation": { ...DialogSituation... } } ] } ]
//   }
//
// Keys are emitted in sorted order, so identical content exports to identical
// bytes.

#include <map>
#include <string>
#include <vector>

#include "crseval/json_io.hpp"
#include "crseval/model.hpp"

namespace crseval {

class DocumentStore;
struct SituationPool;

inline constexpr int kExportFormatVersion = 1;

struct ExportDocument {
    Study study;
    std::vector<SessionRecord> records;
    std::map<std::string, DialogSituation> situations; // situation_id -> situation

    friend bool operator==(const ExportDocument&, const ExportDocument&) = default;
};

Json build_export(const ExportDocument& document);

/// Export of everything the store holds for a study. Throws UnknownStudy.
Json export_study(const DocumentStore& store, const std::string& study_id);
ExportDocument export_document(const DocumentStore& store, const std::string& study_id);

/// Throws VersionMismatch for other format versions and SchemaError naming
/// the offending field path for malformed documents.
ExportDocument parse_export(const Json& document);
ExportDocument parse_export_text(const std::string& text);
ExportDocument load_export(const std::string& path);

} // namespace crseval
