#include "zeta/simulate.hpp"

#include "zeta/error.hpp"
#include "zeta/http.hpp"
#include "zeta/rng.hpp"
#include "zeta/secret.hpp"
#include "zeta/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <optional>
#include <ostream>
#include <unordered_map>

namespace zeta {

namespace {

using nlohmann::json;

struct step {
    std::optional<std::size_t> attribute; // next challenge, as kb index
    std::optional<bool> accepted;
};

// The client side of one service, in-process or remote.
class transport {
public:
    virtual ~transport() = default;
    virtual std::string enroll(const std::string& user_id, const security_policy& policy, std::uint64_t seed) = 0;
    // Returns the session id and first challenge.
    virtual std::pair<std::string, std::size_t> start(const std::string& user_id) = 0;
    virtual step answer(const std::string& session_id, std::size_t index, bool response) = 0;
};

class local_transport final : public transport {
public:
    explicit local_transport(std::shared_ptr<const knowledge_base> kb)
        : service_(std::move(kb), std::make_unique<memory_store>())
    {
    }

    std::string enroll(const std::string& user_id, const security_policy& policy, std::uint64_t seed) override
    {
        return service_
            .enroll({user_id, policy.guessing_threshold, policy.allowed_errors, policy.tolerance, seed})
            .secret_text;
    }

    std::pair<std::string, std::size_t> start(const std::string& user_id) override
    {
        const auto s = service_.start_session(user_id);
        return {s.session_id, service_.kb().attribute_index(s.first.attribute)};
    }

    step answer(const std::string& session_id, std::size_t index, bool response) override
    {
        const auto out = service_.answer(session_id, index, response);
        if (out.next)
            return {service_.kb().attribute_index(out.next->attribute), std::nullopt};
        return {std::nullopt, out.accepted};
    }

private:
    auth_service service_;
};

// Talks JSON to a running server; challenges arrive as labels only.
class http_transport final : public transport {
public:
    http_transport(const knowledge_base& kb, const std::string& host, int port) : client_(host, port)
    {
        for (std::size_t a = 0; a < kb.attribute_count(); ++a)
            by_label_.emplace(kb.attributes()[a].label, a);
    }

    std::string enroll(const std::string& user_id, const security_policy& policy, std::uint64_t seed) override
    {
        const auto body = post("/api/v1/enroll", {{"user_id", user_id},
                                                  {"threshold", policy.guessing_threshold},
                                                  {"allowed_errors", policy.allowed_errors},
                                                  {"tolerance", policy.tolerance},
                                                  {"seed", seed}});
        return body.at("secret_text").get<std::string>();
    }

    std::pair<std::string, std::size_t> start(const std::string& user_id) override
    {
        const auto body = post("/api/v1/sessions", {{"user_id", user_id}});
        return {body.at("session_id").get<std::string>(), label_index(body.at("challenge").at("label"))};
    }

    step answer(const std::string& session_id, std::size_t index, bool response) override
    {
        const auto body =
            post("/api/v1/sessions/" + session_id + "/answers", {{"index", index}, {"response", response}});
        if (body.contains("verdict"))
            return {std::nullopt, body.at("verdict").at("accepted").get<bool>()};
        return {label_index(body.at("challenge").at("label")), std::nullopt};
    }

private:
    json post(const std::string& path, const json& body)
    {
        const auto res = client_.Post(path, body.dump(), "application/json");
        if (!res)
            throw StorageError("HTTP request to " + path + " failed");
        auto reply = json::parse(res->body);
        if (res->status >= 400)
            throw error(reply.value("error_code", "HttpError"), reply.value("message", ""));
        return reply;
    }

    std::size_t label_index(const json& label) const
    {
        const auto it = by_label_.find(label.get<std::string>());
        if (it == by_label_.end())
            throw UnknownId("challenge label not in the knowledge base");
        return it->second;
    }

    httplib::Client client_;
    std::unordered_map<std::string, std::size_t> by_label_;
};

// One full session; `respond` maps (rng, attribute index) to an answer.
template <typename Respond>
bool run_session(transport& t, const std::string& user_id, std::uint64_t seed, Respond&& respond)
{
    rng_engine rng(seed);
    auto [session_id, attribute] = t.start(user_id);
    for (std::size_t index = 0;; ++index) {
        const auto next = t.answer(session_id, index, respond(rng, attribute));
        if (next.accepted)
            return *next.accepted;
        attribute = *next.attribute;
    }
}

struct tally {
    std::size_t honest_sessions = 0;
    std::size_t honest_accepted = 0;
    std::size_t random_sessions = 0;
    std::size_t random_accepted = 0;
    std::vector<bool> verdicts;
};

// Drives `users` users through one fresh transport each.
template <typename MakeTransport>
tally drive(const knowledge_base& kb, const simulation_config& config, std::size_t users, std::size_t sessions,
            MakeTransport&& make_transport)
{
    tally out;
    for (std::size_t u = 0; u < users; ++u) {
        auto t = make_transport();
        const auto user_seed = derive_seed(config.seed, u);
        const auto user_id = "user-" + std::to_string(u);
        const auto secret = parse_formula(t->enroll(user_id, config.policy, user_seed));
        const auto known = truth_table(kb, secret);

        for (std::size_t s = 0; config.honest_cohort && s < sessions; ++s) {
            const bool ok = run_session(*t, user_id, derive_seed(user_seed, 2 * s + 16),
                                        [&](rng_engine& rng, std::size_t attribute) {
                                            const bool slip = config.error_rate > 0.0 &&
                                                              uniform_unit(rng) < config.error_rate;
                                            return static_cast<bool>(known(static_cast<Eigen::Index>(attribute))) != slip;
                                        });
            ++out.honest_sessions;
            out.honest_accepted += ok ? 1 : 0;
            out.verdicts.push_back(ok);
        }
        for (std::size_t s = 0; config.random_cohort && s < sessions; ++s) {
            const bool ok = run_session(*t, user_id, derive_seed(user_seed, 2 * s + 17),
                                        [](rng_engine& rng, std::size_t) { return coin_flip(rng); });
            ++out.random_sessions;
            out.random_accepted += ok ? 1 : 0;
            out.verdicts.push_back(ok);
        }
    }
    return out;
}

cohort_result make_row(std::string name, std::size_t sessions, std::size_t accepted, double analytic)
{
    cohort_result r;
    r.cohort = std::move(name);
    r.sessions = sessions;
    r.accepted = accepted;
    r.rate = sessions == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(sessions);
    r.ci = wilson_interval(accepted, sessions);
    r.analytic = analytic;
    return r;
}

void check_config(const simulation_config& config)
{
    if (!(config.error_rate >= 0.0 && config.error_rate <= 1.0))
        throw PreconditionError("error rate must lie in [0, 1]");
}

} // namespace

std::vector<cohort_result> run_simulation(std::shared_ptr<const knowledge_base> kb, const simulation_config& config)
{
    check_config(config);
    const auto t = drive(*kb, config, config.users, config.sessions_per_user,
                         [&] { return std::make_unique<local_transport>(kb); });

    std::vector<cohort_result> rows;
    const auto n = config.policy.challenge_count;
    const auto e = config.policy.allowed_errors;
    if (config.honest_cohort)
        rows.push_back(make_row("honest", t.honest_sessions, t.honest_accepted,
                                honest_accept_probability(n, e, config.error_rate)));
    if (config.random_cohort)
        rows.push_back(make_row("random", t.random_sessions, t.random_accepted, guess_probability(n, e).to_double()));
    return rows;
}

parity_report check_wire_parity(std::shared_ptr<const knowledge_base> kb, const simulation_config& config,
                                std::size_t users, std::size_t sessions_per_user)
{
    check_config(config);
    const auto local = drive(*kb, config, users, sessions_per_user,
                             [&] { return std::make_unique<local_transport>(kb); });

    // Users never interact, so one shared server yields the same verdicts as
    // the per-user in-process services.
    auth_service service(kb, std::make_unique<memory_store>());
    http_server server(service);
    const int port = server.bind("127.0.0.1", 0);
    server.start();
    const auto remote = drive(*kb, config, users, sessions_per_user,
                              [&] { return std::make_unique<http_transport>(*kb, "127.0.0.1", port); });
    server.stop();

    parity_report report;
    report.sessions = local.verdicts.size();
    for (std::size_t i = 0; i < report.sessions; ++i)
        if (i >= remote.verdicts.size() || remote.verdicts[i] != local.verdicts[i])
            ++report.mismatches;
    return report;
}

void print_cohort_table(const std::vector<cohort_result>& rows, std::ostream& out)
{
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %10s %10s %10s %10s %10s %12s\n", "cohort", "sessions", "accepted",
                  "rate", "ci_low", "ci_high", "analytic");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-8s %10zu %10zu %10.6f %10.6f %10.6f %12.6g\n", r.cohort.c_str(),
                      r.sessions, r.accepted, r.rate, r.ci.low, r.ci.high, r.analytic);
        out << line;
    }
}

} // namespace zeta
