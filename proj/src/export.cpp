#include "crseval/export.hpp"

#include <fstream>
#include <sstream>

#include "crseval/error.hpp"
#include "crseval/store.hpp"

namespace crseval {

Json build_export(const ExportDocument& document)
{
    Json records = Json::array();
    for (const auto& record : document.records) {
        Json r = record;
        for (auto& task : r["tasks"]) {
            auto it = document.situations.find(task["situation_id"].get<std::string>());
            task["situation"] = it == document.situations.end() ? Json(nullptr) : Json(it->second);
        }
        records.push_back(std::move(r));
    }
    return Json{{"format_version", kExportFormatVersion},
                {"study", document.study},
                {"records", std::move(records)}};
}

ExportDocument export_document(const DocumentStore& store, const std::string& study_id)
{
    auto study = store.get_study(study_id);
    if (!study) {
        throw Error(ErrorCode::UnknownStudy, "unknown study '" + study_id + "'");
    }
    ExportDocument doc;
    doc.study = *study;
    auto pool = store.get_pool(study_id);
    for (auto& [id, record] : store.list_records(study_id)) {
        for (const auto& task : record.tasks) {
            if (pool) {
                if (const auto* s = pool->find(task.situation_id)) {
                    doc.situations.emplace(s->situation_id, *s);
                }
            }
        }
        doc.records.push_back(std::move(record));
    }
    return doc;
}

Json export_study(const DocumentStore& store, const std::string& study_id)
{
    return build_export(export_document(store, study_id));
}

ExportDocument parse_export(const Json& document)
{
    if (!document.is_object()) {
        throw SchemaError("", "export must be a JSON object");
    }
    const int version = json_detail::required<int>(document, "format_version");
    if (version != kExportFormatVersion) {
        throw Error(ErrorCode::VersionMismatch,
                    "export format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kExportFormatVersion) + ")");
    }
    ExportDocument doc;
    doc.study = json_detail::required<Study>(document, "study");
    doc.records = json_detail::required_array<SessionRecord>(document, "records");

    const Json& records = document.at("records");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Json& tasks = records[i].at("tasks");
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            auto it = tasks[t].find("situation");
            if (it == tasks[t].end() || it->is_null()) continue;
            try {
                auto s = it->get<DialogSituation>();
                doc.situations.emplace(s.situation_id, std::move(s));
            } catch (SchemaError& e) {
                e.prepend("records[" + std::to_string(i) + "].tasks[" + std::to_string(t) +
                          "].situation");
                throw;
            }
        }
    }
    return doc;
}

ExportDocument parse_export_text(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("export is not valid JSON: ") + e.what());
    }
    return parse_export(j);
}

ExportDocument load_export(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_export_text(buffer.str());
}

} // namespace crseval
