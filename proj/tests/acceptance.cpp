// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include "process.hpp"
#include "test_support.hpp"

#include "zeta/attacker.hpp"
#include "zeta/challenge.hpp"
#include "zeta/http.hpp"
#include "zeta/rng.hpp"
#include "zeta/simulate.hpp"
#include "zeta/store.hpp"
#include "zeta/verifier.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace zeta;
using namespace zeta::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct outcome {
    bool pass = false;
    std::string detail;
};

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start)
{
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fixed(double v, int digits = 6)
{
    std::ostringstream out;
    out.precision(digits);
    out << std::fixed << v;
    return out.str();
}

long double binomial_at_most(int n, int e, long double p)
{
    long double total = 0;
    for (int i = 0; i <= e; ++i) {
        long double c = 1;
        for (int j = 0; j < i; ++j)
            c = c * (n - j) / (j + 1);
        total += c * std::pow(p, i) * std::pow(1 - p, n - i);
    }
    return total;
}

outcome parameters()
{
    const auto start = clock_type::now();
    const auto n14 = min_challenges(1e-4, 0);
    const auto n25 = min_challenges(1e-6, 1);
    const auto g14 = guess_probability(14, 0);
    const auto g25 = guess_probability(25, 1);
    const bool fractions = g14 == dyadic_probability(1, 14) && g25 == dyadic_probability(26, 25);
    const double elapsed = seconds_since(start);
    return {n14 == 14 && n25 == 25 && fractions && elapsed < 1.0,
            "n(1e-4,0)=" + std::to_string(n14) + " n(1e-6,1)=" + std::to_string(n25) + " g(14,0)=" +
                g14.power_fraction() + " g(25,1)=" + g25.power_fraction() + " in " + fixed(elapsed, 3) + "s"};
}

outcome evaluation_oracle()
{
    std::size_t formulas = 0, pairs = 0, mismatches = 0;
    for (std::uint64_t kb_seed = 0; kb_seed < 5; ++kb_seed) {
        const auto kb = random_kb(12, 4, kb_seed);
        rng_engine rng(derive_seed(kb_seed, 99));
        for (int i = 0; i < 250; ++i, ++formulas) {
            const auto f = arbitrary_formula(kb, rng, 1 + i % 4);
            const auto table = truth_table(kb, f);
            for (std::size_t a = 0; a < kb.attribute_count(); ++a, ++pairs) {
                const auto& id = kb.attributes()[a].id;
                const bool expected = oracle_eval(kb, f, id);
                mismatches += evaluate(kb, f, id) != expected;
                mismatches += evaluate(kb, f, a) != expected;
                mismatches += table(static_cast<Eigen::Index>(a)) != expected;
            }
        }
    }
    return {mismatches == 0 && formulas >= 1000,
            std::to_string(formulas) + " formulas, " + std::to_string(pairs) + " pairs, " +
                std::to_string(mismatches) + " mismatches"};
}

outcome random_guesser(const std::shared_ptr<const knowledge_base>& kb)
{
    const auto start = clock_type::now();
    simulation_config c;
    c.users = 10;
    c.sessions_per_user = 10'000;
    c.honest_cohort = false;
    c.policy = policy_for_counts(7, 0);
    c.seed = 2024;
    const auto rows = run_simulation(kb, c);
    const auto& r = rows.front();
    const double p = 1.0 / 128.0;
    const double sigma = std::sqrt(p * (1 - p) / 1e5);
    const double elapsed = seconds_since(start);
    const bool ok = r.sessions == 100'000 && std::abs(r.rate - p) <= 3 * sigma && elapsed < 30.0;
    return {ok, "rate " + fixed(r.rate) + " vs " + fixed(p) + " (3 sigma " + fixed(3 * sigma) + ") over " +
                    std::to_string(r.sessions) + " sessions in " + fixed(elapsed, 2) + "s"};
}

outcome honest_tolerance(const std::shared_ptr<const knowledge_base>& kb)
{
    simulation_config c;
    c.users = 10;
    c.sessions_per_user = 1000;
    c.error_rate = 0.1;
    c.random_cohort = false;
    c.policy = make_policy(1e-6, 1);
    c.seed = 77;
    const auto rows = run_simulation(kb, c);
    const auto& r = rows.front();
    const double p = static_cast<double>(binomial_at_most(25, 1, 0.1L));
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(r.sessions));
    const bool ok = c.policy.challenge_count == 25 && r.sessions == 10'000 && std::abs(r.rate - p) <= 3 * sigma;
    return {ok, "rate " + fixed(r.rate) + " vs " + fixed(p) + " (3 sigma " + fixed(3 * sigma) + ") over " +
                    std::to_string(r.sessions) + " sessions"};
}

outcome balance_property(const knowledge_base& kb)
{
    double worst = 0;
    std::size_t bad = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto f = generate_secret(kb, {}, 0.05, seed);
        const double ratio = balance(kb, f).yes_ratio;
        const double direct = static_cast<double>(oracle_yes(kb, f)) / static_cast<double>(kb.attribute_count());
        worst = std::max(worst, std::abs(ratio - 0.5));
        bad += std::abs(ratio - 0.5) > 0.05 || ratio != direct;
    }
    return {bad == 0, "100 seeds, worst |yes_ratio - 0.5| = " + fixed(worst, 4)};
}

outcome attack_curve()
{
    const auto kb = toy_kb();
    generation_limits limits;
    limits.max_leaves = 2;
    const auto space = full_hypothesis_space(kb, limits);
    std::vector<std::string> every;
    for (const auto& a : kb.attributes())
        every.push_back(a.id);

    std::size_t secrets = 0, violations = 0;
    for (const auto& secret : space.candidates) {
        ++secrets;
        const auto truth = oracle_table(kb, secret);
        for (std::uint64_t run = 0; run < 5; ++run) {
            rng_engine rng(derive_seed(secrets, run));
            std::vector<transcript> seen;
            std::size_t previous = space.size();
            for (int k = 0; k < 8; ++k) {
                transcript t{"observed", {}};
                std::vector<std::size_t> order(kb.attribute_count());
                std::iota(order.begin(), order.end(), std::size_t{0});
                shuffle(std::span<std::size_t>(order), rng);
                for (std::size_t i = 0; i < 4; ++i)
                    t.entries.push_back({every[order[i]], truth[order[i]]});
                seen.push_back(t);
                const auto left = filter_consistent(kb, space, seen, 0);
                bool kept = false;
                for (const auto& f : left.candidates)
                    kept = kept || oracle_table(kb, f) == truth;
                violations += left.size() > previous || !kept;
                previous = left.size();
            }
        }
        transcript all{"observed", {}};
        for (std::size_t a = 0; a < every.size(); ++a)
            all.entries.push_back({every[a], truth[a]});
        const auto left = filter_consistent(kb, space, {all}, 0);
        violations += left.size() != 1 || oracle_table(kb, left.candidates.front()) != truth;
    }

    curve_options opt;
    opt.limits = limits;
    opt.trials = 500;
    const auto rows = observation_curve(kb, parse_formula("OR(yellow, wheel)"), policy_for_counts(7, 0), 6, 0, 1, opt);
    for (std::size_t k = 1; k < rows.size(); ++k)
        violations += rows[k].surviving > rows[k - 1].surviving;

    return {violations == 0, std::to_string(secrets) + " true classes x 5 transcript streams, " +
                                 std::to_string(violations) + " violations"};
}

outcome protocol_integration(const std::shared_ptr<const knowledge_base>& kb)
{
    auth_service service(kb, std::make_unique<memory_store>());
    http_server server(service);
    const int port = server.bind("127.0.0.1", 0);
    server.start();
    httplib::Client client("127.0.0.1", port);

    std::vector<std::string> payloads;
    auto call = [&](const std::string& path, const json& body) {
        const auto r = client.Post(path, body.dump(), "application/json");
        if (!r)
            throw std::runtime_error("no response from " + path);
        payloads.push_back(r->body);
        return std::make_pair(r->status, json::parse(r->body));
    };

    const auto [enroll_status, enrolled] = call("/api/v1/enroll", {{"user_id", "alice"}, {"seed", 12}});
    if (enroll_status != 201)
        return {false, "enrol returned " + std::to_string(enroll_status)};
    const auto secret_text = enrolled["secret_text"].get<std::string>();
    const auto secret = parse_formula(secret_text);
    std::map<std::string, std::string> by_label;
    for (const auto& a : kb->attributes())
        by_label[a.label] = a.id;

    std::set<std::size_t> trip_counts;
    std::size_t accepted = 0, flows = 0;
    const std::vector<std::set<std::size_t>> error_patterns = {{}, {0}, {24}, {12}, {0, 1}, {23, 24}, {3, 9, 17}};
    for (const auto& wrong : error_patterns) {
        auto [status, body] = call("/api/v1/sessions", {{"user_id", "alice"}});
        if (status != 201)
            return {false, "start returned " + std::to_string(status)};
        const auto id = body["session_id"].get<std::string>();
        std::size_t trips = 1;
        json ch = body["challenge"];
        while (true) {
            const auto index = ch["index"].get<std::size_t>();
            const bool truthful = evaluate(*kb, secret, by_label.at(ch["label"].get<std::string>()));
            auto [s, reply] = call("/api/v1/sessions/" + id + "/answers",
                                   {{"index", index}, {"response", truthful != wrong.contains(index)}});
            ++trips;
            if (s != 200)
                return {false, "answer returned " + std::to_string(s)};
            if (reply.contains("verdict")) {
                const bool ok = reply["verdict"]["accepted"].get<bool>();
                accepted += ok == (wrong.size() <= 1);
                break;
            }
            ch = reply["challenge"];
        }
        trip_counts.insert(trips);
        ++flows;
    }
    server.stop();

    std::size_t leaks = 0;
    for (std::size_t i = 1; i < payloads.size(); ++i) {
        const auto& p = payloads[i];
        leaks += p.find(secret_text) != std::string::npos || p.find("\"expected\"") != std::string::npos ||
                 p.find("\"answers\"") != std::string::npos || p.find("secret") != std::string::npos;
    }
    const bool ok = flows == error_patterns.size() && accepted == flows && leaks == 0 && trip_counts.size() == 1 &&
                    *trip_counts.begin() == 26;
    return {ok, std::to_string(flows) + " flows, verdicts as expected in " + std::to_string(accepted) + ", " +
                    std::to_string(payloads.size() - 1) + " payloads scanned, " + std::to_string(leaks) +
                    " leaks, round trips " + std::to_string(*trip_counts.begin()) +
                    (trip_counts.size() == 1 ? " for every pattern" : " (varies)")};
}

outcome persistence()
{
    const auto dir = fs::temp_directory_path() / ("zeta_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto store = dir / "store.json";
    fs::remove(store);
    const std::vector<std::string> argv = {cli(), "serve", "--kb", data_path("example_kb.json"), "--store",
                                           store.string(), "--listen", "127.0.0.1:0"};

    auto run_sessions = [](int port, const std::vector<std::string>& users) {
        httplib::Client c("127.0.0.1", port);
        for (const auto& u : users) {
            const auto s = c.Post("/api/v1/sessions", json{{"user_id", u}}.dump(), "application/json");
            if (!s || s->status != 201)
                throw std::runtime_error("session start failed");
            const auto id = json::parse(s->body)["session_id"].get<std::string>();
            for (std::size_t i = 0; i < 25; ++i)
                c.Post("/api/v1/sessions/" + id + "/answers", json{{"index", i}, {"response", i % 2 == 0}}.dump(),
                       "application/json");
        }
    };

    std::size_t restarts = 0, differences = 0, wrong_resume = 0;
    std::string before;
    {
        child_process server(argv);
        const auto port = server.wait_for_port();
        if (!port)
            return {false, "server did not start"};
        httplib::Client c("127.0.0.1", *port);
        for (const auto* u : {"alice", "bob"})
            c.Post("/api/v1/enroll", json{{"user_id", u}, {"seed", 5}}.dump(), "application/json");
        run_sessions(*port, {"alice", "bob", "alice"});
        before = canonical_store_text(read_file(store.string()));
        server.signal(SIGKILL);
        server.wait();
    }

    for (int round = 0; round < 3; ++round) {
        child_process server(argv);
        const auto port = server.wait_for_port();
        if (!port)
            return {false, "server did not restart"};
        ++restarts;
        const auto after = canonical_store_text(read_file(store.string()));
        differences += after != before;

        // The reloaded plan cursor decides the next challenge.
        const auto snap = snapshot_from_json(json::parse(after));
        const auto kb = bundled_kb();
        httplib::Client c("127.0.0.1", *port);
        for (const auto& [user, record] : snap.users) {
            auto plan = record.plan;
            const auto expected = draw_session_challenges(plan, kb, record.policy.challenge_count).challenges.front();
            const auto s = c.Post("/api/v1/sessions", json{{"user_id", user}}.dump(), "application/json");
            if (!s || s->status != 201 || json::parse(s->body)["challenge"]["label"] != expected.label)
                ++wrong_resume;
        }
        run_sessions(*port, {"bob"});
        before = canonical_store_text(read_file(store.string()));
        server.signal(SIGKILL);
        server.wait();
    }
    const bool ok = restarts == 3 && differences == 0 && wrong_resume == 0 && !fs::exists(store.string() + ".tmp");
    return {ok, std::to_string(restarts) + " SIGKILL restarts, " + std::to_string(differences) +
                    " store differences, " + std::to_string(wrong_resume) + " cursor mismatches"};
}

} // namespace

int main()
{
    const auto kb = std::make_shared<const knowledge_base>(bundled_kb());
    const std::vector<std::pair<std::string, std::function<outcome()>>> criteria = {
        {"1 parameter reproduction", parameters},
        {"2 semantic evaluation oracle", evaluation_oracle},
        {"3 random guesser Monte Carlo", [&] { return random_guesser(kb); }},
        {"4 honest user error tolerance", [&] { return honest_tolerance(kb); }},
        {"5 balance property", [&] { return balance_property(*kb); }},
        {"6 attack curve sanity", attack_curve},
        {"7 protocol integration", [&] { return protocol_integration(kb); }},
        {"8 persistence", persistence},
    };

    int failures = 0;
    for (const auto& [name, check] : criteria) {
        outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
