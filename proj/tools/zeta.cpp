// zeta: operator entry point for the authentication service.
//
//   zeta kb-validate <path>
//   zeta params --threshold 1e-6 --errors 1
//   zeta serve --kb kb.json --store users.json --listen 127.0.0.1:8080 --ttl 600
//   zeta simulate --users 10 --sessions 100 --error-rate 0.1 --seed 1
//   zeta attack --kb toy.json --max-observations 4 --csv curve.csv
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include "zeta/attacker.hpp"
#include "zeta/error.hpp"
#include "zeta/http.hpp"
#include "zeta/kb.hpp"
#include "zeta/secret.hpp"
#include "zeta/service.hpp"
#include "zeta/simulate.hpp"
#include "zeta/verifier.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <condition_variable>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_domain = 1;
constexpr int exit_usage = 2;

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#ifndef ZETA_DEFAULT_KB
#define ZETA_DEFAULT_KB "data/example_kb.json"
#endif

// Policy flags shared by simulate and attack.
struct policy_flags {
    double threshold = 1e-6;
    std::size_t errors = 1;
    double tolerance = zeta::default_balance_tolerance;
    std::optional<std::size_t> challenges;

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--threshold", threshold, "Online guessing threshold")->capture_default_str();
        cmd.add_option("--errors", errors, "Allowed user errors per session")->capture_default_str();
        cmd.add_option("--tolerance", tolerance, "Secret balance tolerance around 0.5")->capture_default_str();
        cmd.add_option("--challenges", challenges,
                       "Fix the challenge count instead of deriving it; the threshold becomes the exact guess "
                       "probability");
    }

    zeta::security_policy resolve() const
    {
        if (!(tolerance >= 0.0 && tolerance <= 0.5))
            throw usage_error("--tolerance must lie in [0, 0.5]");
        if (challenges) {
            if (*challenges < 1 || *challenges > zeta::max_challenge_count || errors >= *challenges)
                throw usage_error("--challenges must lie in [errors + 1, 64]");
            return zeta::policy_for_counts(*challenges, errors, tolerance);
        }
        if (!(threshold > 0.0 && threshold < 1.0))
            throw usage_error("--threshold must lie in (0, 1)");
        return zeta::make_policy(threshold, errors, tolerance);
    }
};

int cmd_kb_validate(const std::string& path, double tolerance, std::uint64_t seed)
{
    const auto kb = zeta::load_kb_file(path);
    std::cout << "attributes: " << kb.attribute_count() << '\n'
              << "concepts:   " << kb.concept_count() << '\n'
              << "relations:  " << kb.relation_count() << '\n';

    if (kb.concept_count() > 0) {
        std::cout << "\nconcept               related  fraction\n";
        for (std::size_t c = 0; c < kb.concept_count(); ++c) {
            const auto related = static_cast<std::size_t>(kb.concept_column(c).count());
            const double fraction =
                kb.attribute_count() == 0 ? 0.0 : static_cast<double>(related) / static_cast<double>(kb.attribute_count());
            std::printf("%-20s %8zu  %8.3f\n", kb.concepts()[c].id.c_str(), related, fraction);
        }
        std::fflush(stdout);
    }

    std::cout << '\n';
    if (kb.attribute_count() == 0 || kb.concept_count() < 2) {
        std::cout << "balanced secret: infeasible (needs attributes and at least two concepts)\n";
        return exit_ok;
    }
    try {
        const auto secret = zeta::generate_secret(kb, {}, tolerance, seed);
        const auto report = zeta::balance(kb, secret);
        std::cout << "balanced secret: feasible at tolerance " << tolerance << ", e.g. " << zeta::to_string(secret)
                  << " (" << report.yes_count << " yes / " << report.no_count << " no)\n";
    } catch (const zeta::NoBalancedSecret&) {
        std::cout << "balanced secret: none found at tolerance " << tolerance << '\n';
    }
    return exit_ok;
}

int cmd_params(double threshold, std::size_t errors)
{
    if (!(threshold > 0.0 && threshold < 1.0))
        throw usage_error("--threshold must lie in (0, 1)");
    const auto n = zeta::min_challenges(threshold, errors);
    const auto p = zeta::guess_probability(n, errors);
    std::cout << "threshold:         " << threshold << '\n'
              << "allowed_errors:    " << errors << '\n'
              << "challenge_count:   " << n << '\n';
    std::printf("guess_probability: %.6e (%s = %s)\n", p.to_double(), p.fraction().c_str(),
                p.power_fraction().c_str());
    std::fflush(stdout);
    return exit_ok;
}

std::pair<std::string, int> split_address(const std::string& address)
{
    const auto colon = address.rfind(':');
    if (colon == std::string::npos)
        throw usage_error("--listen expects host:port");
    try {
        const int port = std::stoi(address.substr(colon + 1));
        if (port < 0 || port > 65535)
            throw usage_error("port out of range");
        return {address.substr(0, colon), port};
    } catch (const std::logic_error&) {
        throw usage_error("--listen expects host:port");
    }
}

int cmd_serve(const std::string& kb_path, const std::string& store_path, const std::string& listen, double ttl_seconds)
{
    const auto [host, port] = split_address(listen);
    if (!(ttl_seconds > 0))
        throw usage_error("--ttl must be positive");

    auto kb = std::make_shared<const zeta::knowledge_base>(zeta::load_kb_file(kb_path));
    zeta::service_config config;
    config.session_ttl = std::chrono::milliseconds(static_cast<std::int64_t>(ttl_seconds * 1000));
    zeta::auth_service service(kb, std::make_unique<zeta::json_file_store>(store_path), config);

    // Signals are taken synchronously by a dedicated thread; every other
    // thread inherits the blocked mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    zeta::http_server server(service);
    int bound = 0;
    try {
        bound = server.bind(host, port);
    } catch (const std::runtime_error& e) {
        std::cerr << "zeta serve: " << e.what() << '\n';
        return exit_domain;
    }
    std::cout << "listening on " << host << ':' << bound << std::endl;

    std::mutex mutex;
    std::condition_variable cv;
    bool stopping = false;

    std::thread janitor([&] {
        std::unique_lock lock(mutex);
        while (!cv.wait_for(lock, std::chrono::seconds(1), [&] { return stopping; }))
            service.expire_sessions(zeta::system_now_ms());
    });
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        {
            std::lock_guard lock(mutex);
            stopping = true;
        }
        cv.notify_all();
        server.stop();
    });

    server.serve();
    if (!stopping) {
        // serve() returned on its own; release the waiter.
        pthread_kill(waiter.native_handle(), SIGTERM);
    }
    waiter.join();
    janitor.join();
    std::cout << "stopped" << std::endl;
    return exit_ok;
}

int cmd_simulate(const std::string& kb_path, std::size_t users, std::size_t sessions, double error_rate,
                 const policy_flags& flags, std::uint64_t seed, const std::string& cohort, bool wire)
{
    if (!(error_rate >= 0.0 && error_rate <= 1.0))
        throw usage_error("--error-rate must lie in [0, 1]");
    zeta::simulation_config config;
    config.users = users;
    config.sessions_per_user = sessions;
    config.error_rate = error_rate;
    config.policy = flags.resolve();
    config.seed = seed;
    config.honest_cohort = cohort != "random";
    config.random_cohort = cohort != "honest";

    auto kb = std::make_shared<const zeta::knowledge_base>(zeta::load_kb_file(kb_path));
    std::cout << "policy: n=" << config.policy.challenge_count << " e=" << config.policy.allowed_errors
              << " threshold=" << config.policy.guessing_threshold << '\n';
    zeta::print_cohort_table(zeta::run_simulation(kb, config), std::cout);

    if (wire) {
        const auto report = zeta::check_wire_parity(kb, config, std::min<std::size_t>(users, 2),
                                                    std::min<std::size_t>(sessions, 5));
        std::cout << "wire parity: " << report.sessions - report.mismatches << '/' << report.sessions
                  << " sessions agree\n";
        if (report.mismatches != 0)
            return exit_domain;
    }
    return exit_ok;
}

struct attack_flags {
    std::string kb_path = ZETA_DEFAULT_KB;
    std::size_t min_leaves = 2;
    std::size_t max_leaves = 2;
    std::size_t max_depth = 3;
    bool no_not = false;
    std::uint64_t cap = 5'000'000;
    std::size_t max_observations = 5;
    std::size_t slack = 0;
    std::size_t trials = 2000;
    double error_rate = 0.0;
    std::string secret;
    std::string csv;
    std::uint64_t seed = 1;
};

int cmd_attack(const attack_flags& a, const policy_flags& flags)
{
    if (!(a.error_rate >= 0.0 && a.error_rate <= 1.0))
        throw usage_error("--error-rate must lie in [0, 1]");
    if (a.trials == 0)
        throw usage_error("--trials must be positive");
    const auto kb = zeta::load_kb_file(a.kb_path);
    const auto policy = flags.resolve();

    zeta::curve_options options;
    options.limits.min_leaves = a.min_leaves;
    options.limits.max_leaves = a.max_leaves;
    options.limits.max_depth = a.max_depth;
    options.limits.allow_not = !a.no_not;
    options.limits.enumeration_cap = a.cap;
    options.trials = a.trials;
    options.user_error_rate = a.error_rate;

    const auto secret = a.secret.empty()
                            ? zeta::generate_secret(kb, options.limits, policy.tolerance, zeta::derive_seed(a.seed, 7))
                            : zeta::parse_formula(a.secret);
    zeta::validate_secret(kb, secret);

    const auto rows = zeta::observation_curve(kb, secret, policy, a.max_observations, a.slack, a.seed, options);

    if (a.csv.empty()) {
        zeta::write_curve_csv(rows, std::cout);
        return exit_ok;
    }
    std::ofstream out(a.csv);
    if (!out)
        throw zeta::StorageError("cannot write '" + a.csv + "'");
    zeta::write_curve_csv(rows, out);

    std::cout << "secret: " << zeta::to_string(secret) << '\n'
              << "policy: n=" << policy.challenge_count << " e=" << policy.allowed_errors << '\n'
              << "blind guess: " << zeta::guess_probability(policy.challenge_count, policy.allowed_errors).to_double()
              << "\n\n";
    std::printf("%12s %10s %10s %10s %10s\n", "observations", "surviving", "estimate", "ci_low", "ci_high");
    for (const auto& r : rows)
        std::printf("%12zu %10zu %10.5f %10.5f %10.5f\n", r.observations, r.surviving, r.impersonation.estimate,
                    r.impersonation.ci.low, r.impersonation.ci.high);
    std::fflush(stdout);
    std::cout << "curve written to " << a.csv << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Zero-trust knowledge-based challenge-response authentication"};
    app.require_subcommand(1);

    auto* validate = app.add_subcommand("kb-validate", "Validate a knowledge base and report balance diagnostics");
    std::string validate_path;
    double validate_tolerance = zeta::default_balance_tolerance;
    std::uint64_t validate_seed = 0;
    validate->add_option("path", validate_path, "Knowledge base JSON file")->required();
    validate->add_option("--tolerance", validate_tolerance, "Balance tolerance to probe")->capture_default_str();
    validate->add_option("--seed", validate_seed, "Seed for the feasibility probe")->capture_default_str();

    auto* params = app.add_subcommand("params", "Challenge count and exact guess probability for a policy");
    double params_threshold = 1e-6;
    std::size_t params_errors = 1;
    params->add_option("--threshold", params_threshold, "Online guessing threshold")->capture_default_str();
    params->add_option("--errors", params_errors, "Allowed user errors")->capture_default_str();

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string serve_kb = ZETA_DEFAULT_KB;
    std::string serve_store = "zeta_store.json";
    std::string serve_listen = "127.0.0.1:8080";
    double serve_ttl = 600;
    serve->add_option("--kb", serve_kb, "Knowledge base JSON file")->envname("ZETA_KB")->capture_default_str();
    serve->add_option("--store", serve_store, "User store JSON file")->envname("ZETA_STORE")->capture_default_str();
    serve->add_option("--listen", serve_listen, "host:port (port 0 picks one)")
        ->envname("ZETA_LISTEN")
        ->capture_default_str();
    serve->add_option("--ttl", serve_ttl, "Session time-to-live in seconds")
        ->envname("ZETA_SESSION_TTL")
        ->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Run enrol/authenticate loops against the service core");
    std::string sim_kb = ZETA_DEFAULT_KB;
    std::size_t sim_users = 10;
    std::size_t sim_sessions = 100;
    double sim_error_rate = 0.0;
    std::uint64_t sim_seed = 1;
    std::string sim_cohort = "both";
    bool sim_wire = false;
    policy_flags sim_policy;
    simulate->add_option("--kb", sim_kb, "Knowledge base JSON file")->capture_default_str();
    simulate->add_option("--users", sim_users, "Enrolled users")->capture_default_str();
    simulate->add_option("--sessions", sim_sessions, "Sessions per user and cohort")->capture_default_str();
    simulate->add_option("--error-rate", sim_error_rate, "Honest per-challenge error rate")->capture_default_str();
    simulate->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
    simulate->add_option("--cohort", sim_cohort, "honest, random or both")
        ->check(CLI::IsMember({"honest", "random", "both"}))
        ->capture_default_str();
    simulate->add_flag("--wire", sim_wire, "Also replay a small sample over HTTP and compare verdicts");
    sim_policy.add_to(*simulate);

    auto* attack = app.add_subcommand("attack", "Observation attack curve (CSV)");
    attack_flags atk;
    policy_flags atk_policy;
    atk_policy.challenges = 7;
    atk_policy.errors = 0;
    attack->add_option("--kb", atk.kb_path, "Knowledge base JSON file")->capture_default_str();
    attack->add_option("--min-leaves", atk.min_leaves, "Hypothesis leaves, lower bound")->capture_default_str();
    attack->add_option("--max-leaves", atk.max_leaves, "Hypothesis leaves, upper bound")->capture_default_str();
    attack->add_option("--max-depth", atk.max_depth, "Hypothesis depth bound")->capture_default_str();
    attack->add_flag("--no-not", atk.no_not, "Exclude NOT from hypotheses");
    attack->add_option("--cap", atk.cap, "Largest syntactic hypothesis space to enumerate")->capture_default_str();
    attack->add_option("--max-observations", atk.max_observations, "Observed sessions")->capture_default_str();
    attack->add_option("--slack", atk.slack, "Disagreements tolerated per transcript")->capture_default_str();
    attack->add_option("--trials", atk.trials, "Monte Carlo trials per row")->capture_default_str();
    attack->add_option("--error-rate", atk.error_rate, "Observed user's error rate")->capture_default_str();
    attack->add_option("--secret", atk.secret, "True secret (canonical text); generated when absent");
    attack->add_option("--csv", atk.csv, "Write the curve here and print a summary; CSV on stdout otherwise");
    attack->add_option("--seed", atk.seed, "Random seed")->capture_default_str();
    atk_policy.add_to(*attack);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*validate)
            return cmd_kb_validate(validate_path, validate_tolerance, validate_seed);
        if (*params)
            return cmd_params(params_threshold, params_errors);
        if (*serve)
            return cmd_serve(serve_kb, serve_store, serve_listen, serve_ttl);
        if (*simulate)
            return cmd_simulate(sim_kb, sim_users, sim_sessions, sim_error_rate, sim_policy, sim_seed, sim_cohort,
                                sim_wire);
        if (*attack)
            return cmd_attack(atk, atk_policy);
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const zeta::error& e) {
        std::cerr << e.code() << ": " << e.what() << '\n';
        return exit_domain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_domain;
    }
    return exit_usage;
}
