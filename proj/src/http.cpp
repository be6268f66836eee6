#include "crseval/http.hpp"

#include <httplib.h>

#include "crseval/service.hpp"

namespace crseval {

namespace {

void reply(httplib::Response& res, const ApiResponse& api)
{
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
}

bool parse_body(const httplib::Request& req, httplib::Response& res, Json& out)
{
    if (req.body.empty()) {
        out = Json::object();
        return true;
    }
    try {
        out = Json::parse(req.body);
    } catch (const std::exception& e) {
        reply(res, {400, Json{{"error", "malformed-json"}, {"message", e.what()}}});
        return false;
    }
    if (!out.is_object()) {
        reply(res, {400, Json{{"error", "malformed-json"}, {"message", "body must be a JSON object"}}});
        return false;
    }
    return true;
}

} // namespace

void mount_routes(httplib::Server& server, EvaluationService& service,
                  const std::filesystem::path& static_dir)
{
    server.Post("/api/session", [&service](const httplib::Request& req, httplib::Response& res) {
        Json body;
        if (parse_body(req, res, body)) reply(res, service.create_session(body));
    });

    server.Post(R"(/api/session/([0-9a-f]+)/ack-instructions)",
                [&service](const httplib::Request& req, httplib::Response& res) {
                    reply(res, service.acknowledge_instructions(req.matches[1]));
                });

    server.Post(R"(/api/session/([0-9a-f]+)/task/([0-9]{1,6}))",
                [&service](const httplib::Request& req, httplib::Response& res) {
                    Json body;
                    if (parse_body(req, res, body)) {
                        reply(res, service.submit_task(req.matches[1], std::stoi(req.matches[2]), body));
                    }
                });

    server.Post(R"(/api/session/([0-9a-f]+)/questionnaire)",
                [&service](const httplib::Request& req, httplib::Response& res) {
                    Json body;
                    if (parse_body(req, res, body)) {
                        reply(res, service.submit_questionnaire(req.matches[1], body));
                    }
                });

    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });

    if (!static_dir.empty()) {
        server.set_mount_point("/", static_dir.string());
    }
}

} // namespace crseval
