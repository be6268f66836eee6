#pragma once

#include <filesystem>

namespace httplib {
class Server;
}

namespace crseval {

class EvaluationService;

/// Registers the participant API routes on server. Request bodies must be
/// JSON; malformed bodies get 400. When static_dir is non-empty it is served
/// at "/".
void mount_routes(httplib::Server& server, EvaluationService& service,
                  const std::filesystem::path& static_dir = {});

} // namespace crseval
