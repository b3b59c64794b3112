#include "nudge/http_api.hpp"

#include "nudge/errors.hpp"

#include "httplib.h"

namespace nudge::service {

using nlohmann::json;

int http_status(const std::string& code) {
    if (code == "validation_error" || code == "protocol_error" || code == "contract_error" ||
        code == "config_error" || code == "parameter_error" || code == "index_error" ||
        code == "bad_request") {
        return 400;
    }
    if (code == "not_found") {
        return 404;
    }
    if (code == "conflict_error" || code == "state_error" || code == "missing_artifacts") {
        return 409;
    }
    return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json error_body(const std::string& code, const std::string& message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, 200, fn(req));
        } catch (const MissingArtifactError& e) {
            auto body = error_body(e.code(), e.what());
            body["error"]["missing"] = e.missing();
            send_json(res, 409, body);
        } catch (const Error& e) {
            send_json(res, http_status(e.code()), error_body(e.code(), e.what()));
        } catch (const json::exception& e) {
            send_json(res, 400, error_body("bad_request", e.what()));
        } catch (const std::exception& e) {
            send_json(res, 500, error_body("internal_error", e.what()));
        }
    };
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) {
        return json::object();
    }
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("request body is not JSON: ") + e.what());
    }
}

} // namespace

HttpApi::HttpApi(SessionManager& sessions, HttpOptions options)
    : sessions_(sessions), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    routes();
}

HttpApi::~HttpApi() {
    stop();
}

void HttpApi::routes() {
    auto& s = *server_;
    const std::string origin = options_.cors_origin;
    s.set_default_headers({{"Access-Control-Allow-Origin", origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
    s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Post("/sessions", guarded([this](const httplib::Request& req) {
               return sessions_.create_session(parse_body(req));
           }));
    s.Get(R"(/sessions/([^/]+)/day)", guarded([this](const httplib::Request& req) {
              return sessions_.day_view(req.matches[1]);
          }));
    s.Post(R"(/sessions/([^/]+)/orders)", guarded([this](const httplib::Request& req) {
               return sessions_.post_order(req.matches[1], parse_body(req));
           }));
    s.Get(R"(/sessions/([^/]+)/summary)", guarded([this](const httplib::Request& req) {
              return sessions_.summary(req.matches[1]);
          }));
    s.Get(R"(/sessions/([^/]+)/replay)", guarded([this](const httplib::Request& req) {
              return sessions_.replay(req.matches[1]);
          }));
    s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    if (options_.static_dir) {
        if (!s.set_mount_point("/", *options_.static_dir)) {
            throw ConfigError("static directory not found: " + *options_.static_dir);
        }
    }
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            send_json(res, res.status, error_body(res.status == 404 ? "not_found" : "http_error",
                                                  "status " + std::to_string(res.status)));
        }
    });
}

int HttpApi::bind() {
    int port = options_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(options_.host);
    } else if (!server_->bind_to_port(options_.host, port)) {
        port = -1;
    }
    if (port < 0) {
        throw ConfigError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    return port;
}

void HttpApi::listen() {
    server_->listen_after_bind();
}

void HttpApi::stop() {
    if (server_ && server_->is_running()) {
        server_->stop();
    }
}

} // namespace nudge::service
