#include "zeta/http.hpp"

#include "zeta/error.hpp"

#include <httplib.h>

#include <stdexcept>

namespace zeta {

using nlohmann::json;

int http_status_for(const std::string& code)
{
    if (code == "UnknownUser" || code == "UnknownSession")
        return 404;
    if (code == "DuplicateUser" || code == "OutOfOrder" || code == "SessionClosed")
        return 409;
    if (code == "ParseError")
        return 400;
    if (code == "ValidationError" || code == "NoBalancedSecret" || code == "DomainError" ||
        code == "PlanTooSmall" || code == "PreconditionError")
        return 422;
    return 500;
}

namespace {

json challenge_json(const challenge& c)
{
    return {{"index", c.index}, {"label", c.label}};
}

void reply(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const std::string& code, const std::string& message)
{
    reply(res, http_status_for(code), {{"error_code", code}, {"message", message}});
}

json parse_body(const httplib::Request& req, std::initializer_list<const char*> allowed)
{
    json body;
    try {
        body = json::parse(req.body);
    } catch (const json::parse_error&) {
        throw ParseError("request body is not valid JSON");
    }
    if (!body.is_object())
        throw ValidationError("request body must be a JSON object");
    for (const auto& [key, _] : body.items()) {
        bool known = false;
        for (const char* a : allowed)
            known = known || key == a;
        if (!known)
            throw ValidationError("unexpected field \"" + key + "\"");
    }
    return body;
}

template <typename T>
T field(const json& body, const char* key)
{
    const auto it = body.find(key);
    if (it == body.end())
        throw ValidationError(std::string("missing field \"") + key + "\"");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field \"") + key + "\" has the wrong type");
    }
}

std::size_t unsigned_field(const json& body, const char* key)
{
    const auto it = body.find(key);
    if (it == body.end())
        throw ValidationError(std::string("missing field \"") + key + "\"");
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
        throw ValidationError(std::string("field \"") + key + "\" must be a non-negative integer");
    return it->get<std::size_t>();
}

template <typename Handler>
httplib::Server::Handler guarded(Handler&& handler)
{
    return [handler = std::forward<Handler>(handler)](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const error& e) {
            reply_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            reply_error(res, "InternalError", e.what());
        }
    };
}

} // namespace

http_server::http_server(auth_service& service) : service_(service), server_(std::make_unique<httplib::Server>())
{
    auto& srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Cache-Control", "no-store"}});
    srv.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Post("/api/v1/enroll", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, {"user_id", "threshold", "allowed_errors", "tolerance", "seed"});
        enroll_request r;
        r.user_id = field<std::string>(body, "user_id");
        if (body.contains("threshold"))
            r.threshold = field<double>(body, "threshold");
        if (body.contains("allowed_errors"))
            r.allowed_errors = unsigned_field(body, "allowed_errors");
        if (body.contains("tolerance"))
            r.tolerance = field<double>(body, "tolerance");
        if (body.contains("seed") && !body.at("seed").is_null())
            r.seed = static_cast<std::uint64_t>(unsigned_field(body, "seed"));
        const auto out = service_.enroll(r);
        reply(res, 201,
              {{"user_id", out.user_id}, {"challenge_count", out.challenge_count}, {"secret_text", out.secret_text}});
    }));

    srv.Post("/api/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, {"user_id"});
        const auto out = service_.start_session(field<std::string>(body, "user_id"));
        reply(res, 201,
              {{"session_id", out.session_id}, {"total", out.total}, {"challenge", challenge_json(out.first)}});
    }));

    srv.Post(R"(/api/v1/sessions/([^/]+)/answers)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req, {"index", "response"});
                 const auto index = unsigned_field(body, "index");
                 const auto response = field<bool>(body, "response");
                 const auto out = service_.answer(req.matches[1].str(), index, response);
                 if (out.next)
                     reply(res, 200, {{"challenge", challenge_json(*out.next)}});
                 else
                     reply(res, 200, {{"verdict", {{"accepted", *out.accepted}}}});
             }));

    srv.Get(R"(/api/v1/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto v = service_.view(req.matches[1].str());
        json body = {{"session_id", v.session_id},
                     {"total", v.total},
                     {"answered", v.answered},
                     {"state", to_string(v.state)}};
        if (v.current)
            body["challenge"] = challenge_json(*v.current);
        if (v.accepted)
            body["verdict"] = {{"accepted", *v.accepted}};
        reply(res, 200, body);
    }));

    srv.Get("/api/v1/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200,
              {{"status", "ok"},
               {"kb_attributes", service_.kb().attribute_count()},
               {"kb_concepts", service_.kb().concept_count()}});
    }));
}

http_server::~http_server() { stop(); }

int http_server::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0)
            throw std::runtime_error("cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port))
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void http_server::serve() { server_->listen_after_bind(); }

void http_server::start()
{
    worker_ = std::thread([this] { serve(); });
    server_->wait_until_ready();
}

void http_server::stop()
{
    if (worker_.joinable() || server_->is_running()) {
        server_->wait_until_ready();
        server_->stop();
    }
    if (worker_.joinable())
        worker_.join();
}

bool http_server::running() const { return server_->is_running(); }

} // namespace zeta
