#pragma once

// JSON encoding of the domain types. Decoding failures raise SchemaError,
// whose message carries the dotted path of the offending field
// (e.g. "records[3].tasks[0].ratings").

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crseval/error.hpp"
#include "crseval/model.hpp"

namespace crseval {

using Json = nlohmann::json;

class SchemaError : public Error {
public:
    SchemaError(std::string path, std::string detail);

    const std::string& path() const noexcept { return path_; }
    const std::string& detail() const noexcept { return detail_; }
    const char* what() const noexcept override { return message_.c_str(); }

    void prepend(std::string_view segment);

private:
    void rebuild();

    std::string path_;
    std::string detail_;
    std::string message_;
};

std::string_view to_string(Speaker speaker);
std::string_view to_string(QuestionKind kind);
std::string_view to_string(ImplicitFlag flag);
Speaker speaker_from_string(std::string_view text);
QuestionKind question_kind_from_string(std::string_view text);
ImplicitFlag implicit_flag_from_string(std::string_view text);

void to_json(Json& j, const RatingScale& v);
void from_json(const Json& j, RatingScale& v);
void to_json(Json& j, const Utterance& v);
void from_json(const Json& j, Utterance& v);
void to_json(Json& j, const DialogSituation& v);
void from_json(const Json& j, DialogSituation& v);
void to_json(Json& j, const QuestionnaireItem& v);
void from_json(const Json& j, QuestionnaireItem& v);
void to_json(Json& j, const ImplicitThresholds& v);
void from_json(const Json& j, ImplicitThresholds& v);
void to_json(Json& j, const Study& v);
void from_json(const Json& j, Study& v);
void to_json(Json& j, const TaskAssignment& v);
void from_json(const Json& j, TaskAssignment& v);
void to_json(Json& j, const SessionState& v);
void from_json(const Json& j, SessionState& v);
void to_json(Json& j, const TaskResult& v);
void from_json(const Json& j, TaskResult& v);
void to_json(Json& j, const ReliabilityVerdict& v);
void from_json(const Json& j, ReliabilityVerdict& v);
void to_json(Json& j, const SessionEvent& v);
void from_json(const Json& j, SessionEvent& v);
void to_json(Json& j, const Session& v);
void from_json(const Json& j, Session& v);
void to_json(Json& j, const SessionRecord& v);
void from_json(const Json& j, SessionRecord& v);

Json answer_to_json(const Answer& answer);
Answer answer_from_json(const Json& j);

namespace json_detail {

// Reads a required member, prefixing the member name onto any nested
// SchemaError so the full path survives.
template <typename T>
T required(const Json& j, std::string_view key)
{
    if (!j.is_object()) {
        throw SchemaError("", "expected an object");
    }
    auto it = j.find(key);
    if (it == j.end()) {
        throw SchemaError(std::string(key), "missing required field");
    }
    try {
        return it->template get<T>();
    } catch (SchemaError& e) {
        e.prepend(key);
        throw;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw SchemaError(std::string(key), e.what());
    }
}

template <typename T>
T optional_or(const Json& j, std::string_view key, T fallback)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    return required<T>(j, key);
}

template <typename T>
std::optional<T> optional_field(const Json& j, std::string_view key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return required<T>(j, key);
}

template <typename T>
std::vector<T> required_array(const Json& j, std::string_view key)
{
    const Json& arr = required<Json>(j, key);
    if (!arr.is_array()) {
        throw SchemaError(std::string(key), "expected an array");
    }
    std::vector<T> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        try {
            out.push_back(arr[i].template get<T>());
        } catch (SchemaError& e) {
            e.prepend(std::string(key) + "[" + std::to_string(i) + "]");
            throw;
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw SchemaError(std::string(key) + "[" + std::to_string(i) + "]", e.what());
        }
    }
    return out;
}

} // namespace json_detail

} // namespace crseval
