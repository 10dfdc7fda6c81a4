#pragma once

#include "zeta/service.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace zeta {

// HTTP status for an error code; 500 for codes outside the API contract.
int http_status_for(const std::string& error_code);

// JSON/HTTP binding of auth_service:
//   POST /api/v1/enroll                 -> 201 {user_id, challenge_count, secret_text}
//   POST /api/v1/sessions               -> 201 {session_id, total, challenge:{index, label}}
//   POST /api/v1/sessions/{id}/answers  -> 200 {challenge:{index, label}} | {verdict:{accepted}}
//   GET  /api/v1/sessions/{id}          -> 200 {session_id, total, answered, state, challenge?, verdict?}
//   GET  /api/v1/healthz                -> 200 {status, kb_attributes, kb_concepts}
// Errors are {error_code, message}.
class http_server {
public:
    explicit http_server(auth_service& service);
    ~http_server();

    http_server(const http_server&) = delete;
    http_server& operator=(const http_server&) = delete;

    // Returns the bound port; port 0 picks a free one. Throws
    // std::runtime_error on bind failure.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void serve();
    // serve() on a background thread; returns once requests are accepted.
    void start();
    // Safe from any thread; joins the background thread if there is one.
    void stop();
    bool running() const;

private:
    auth_service& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread worker_;
};

} // namespace zeta
