// Participant-facing HTTP service, plus store maintenance commands.
//
//   crseval-server serve   [--config FILE] [--listen ADDR] [--port N] [--study FILE]
//                          [--pool FILE] [--store FILE] [--thresholds FILE] [--static DIR]
//   crseval-server export  --store FILE --study-id ID [--output FILE]
//   crseval-server default-study [--output FILE]

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <httplib.h>

#include "crseval/error.hpp"
#include "crseval/export.hpp"
#include "crseval/http.hpp"
#include "crseval/ingestion.hpp"
#include "crseval/service.hpp"
#include "crseval/store.hpp"

namespace {

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) {
        throw crseval::Error(crseval::ErrorCode::IoError, "cannot write '" + path + "'");
    }
}

int serve(const crseval::ServiceConfig& config)
{
    using namespace crseval;
    Study study = config.study_path.empty() ? default_study() : load_study(config.study_path);
    if (!config.thresholds_path.empty()) {
        study.implicit_thresholds = load_thresholds(config.thresholds_path);
    }
    if (config.pool_path.empty()) {
        throw Error(ErrorCode::InvalidArgument, "a pool file is required (--pool or CRSEVAL_POOL)");
    }
    SituationPool pool = load_pool(config.pool_path);
    auto store = std::make_shared<FileStore>(config.store_path);
    EvaluationService service(std::move(study), std::move(pool), store);

    // Block SIGINT/SIGTERM before httplib spawns its workers; a dedicated
    // thread waits for them and stops the server outside signal context.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    httplib::Server server;
    mount_routes(server, service, config.static_dir);

    int port = config.port;
    if (port == 0) {
        port = server.bind_to_any_port(config.listen_address);
    } else if (!server.bind_to_port(config.listen_address, port)) {
        port = -1;
    }
    if (port < 0) {
        std::cerr << "cannot bind " << config.listen_address << ":" << config.port << "\n";
        return 1;
    }
    std::thread waiter([&server, stop_signals] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        server.stop();
    });
    waiter.detach();

    std::cout << "listening on " << config.listen_address << ":" << port << std::endl;
    server.listen_after_bind();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Human-evaluation service for conversational recommender responses"};
    app.require_subcommand(1);

    std::string config_path;
    crseval::ServiceConfig overrides;
    std::string listen, study, pool, store, thresholds, static_dir;
    int port = -1;
    auto* serve_cmd = app.add_subcommand("serve", "Run the participant API");
    serve_cmd->add_option("--config", config_path, "JSON config file");
    serve_cmd->add_option("--listen", listen, "Listen address");
    serve_cmd->add_option("--port", port, "Listen port (0 picks a free port)");
    serve_cmd->add_option("--study", study, "Study JSON (default: built-in study)");
    serve_cmd->add_option("--pool", pool, "Situation pool JSON");
    serve_cmd->add_option("--store", store, "Append-log store file");
    serve_cmd->add_option("--thresholds", thresholds, "Implicit-check thresholds JSON");
    serve_cmd->add_option("--static", static_dir, "Directory served at /");

    std::string export_store, export_study_id, export_output;
    auto* export_cmd = app.add_subcommand("export", "Write the export document of a study");
    export_cmd->add_option("--store", export_store, "Append-log store file")->required();
    export_cmd->add_option("--study-id", export_study_id, "Study id")->required();
    export_cmd->add_option("--output", export_output, "Output file (default stdout)");

    std::string study_output;
    auto* default_cmd = app.add_subcommand("default-study", "Print the built-in study configuration");
    default_cmd->add_option("--output", study_output, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) {
            crseval::ServiceConfig config;
            if (!config_path.empty()) config = crseval::load_service_config(config_path);
            config = crseval::apply_env_overrides(config, [](const char* k) { return std::getenv(k); });
            if (!listen.empty()) config.listen_address = listen;
            if (port >= 0) config.port = port;
            if (!study.empty()) config.study_path = study;
            if (!pool.empty()) config.pool_path = pool;
            if (!store.empty()) config.store_path = store;
            if (!thresholds.empty()) config.thresholds_path = thresholds;
            if (!static_dir.empty()) config.static_dir = static_dir;
            return serve(config);
        }
        if (*export_cmd) {
            crseval::FileStore file_store(export_store);
            write_output(export_output, crseval::export_study(file_store, export_study_id).dump(2) + "\n");
            return 0;
        }
        if (*default_cmd) {
            write_output(study_output, crseval::Json(crseval::default_study()).dump(2) + "\n");
            return 0;
        }
    } catch (const crseval::Error& e) {
        std::cerr << "error [" << crseval::to_string(e.code()) << "]: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
