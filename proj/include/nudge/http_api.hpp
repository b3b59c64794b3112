#pragma once

#include "nudge/service.hpp"

#include <memory>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace nudge::service {

struct HttpOptions {
    std::string host{"127.0.0.1"};
    int port{8080}; // 0 picks a free port
    std::string cors_origin{"*"};
    std::optional<std::string> static_dir; // serves the web UI bundle when set
};

// REST front end for SessionManager:
//   POST /sessions, GET /sessions/{id}/day, POST /sessions/{id}/orders,
//   GET /sessions/{id}/summary, GET /sessions/{id}/replay.
// Errors are {"error": {"code", "message"}} with 400/404/409/500.
class HttpApi {
public:
    HttpApi(SessionManager& sessions, HttpOptions options);
    ~HttpApi();

    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    // Binds and returns the port. Throws ConfigError when binding fails.
    int bind();
    // Blocks until stop().
    void listen();
    void stop();

private:
    void routes();

    SessionManager& sessions_;
    HttpOptions options_;
    std::unique_ptr<httplib::Server> server_;
};

// Maps a library error code to an HTTP status.
int http_status(const std::string& code);

} // namespace nudge::service
