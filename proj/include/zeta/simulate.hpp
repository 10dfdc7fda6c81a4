#pragma once

#include "zeta/kb.hpp"
#include "zeta/stats.hpp"
#include "zeta/verifier.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace zeta {

struct simulation_config {
    std::size_t users = 10;
    std::size_t sessions_per_user = 100;
    // Per-challenge probability that an honest user answers wrongly.
    double error_rate = 0.0;
    security_policy policy = make_policy(1e-6, 1);
    std::uint64_t seed = 1;
    bool honest_cohort = true;
    bool random_cohort = true;
};

struct cohort_result {
    std::string cohort;
    std::size_t sessions = 0;
    std::size_t accepted = 0;
    double rate = 0.0;
    interval ci;
    // Model acceptance probability for the cohort.
    double analytic = 0.0;
};

// Enrols `users` users and runs full authentication sessions against the
// in-process service core: an honest cohort answering from the secret with
// error_rate slips, and a random cohort flipping fair coins. Deterministic
// in config.seed.
std::vector<cohort_result> run_simulation(std::shared_ptr<const knowledge_base> kb, const simulation_config& config);

struct parity_report {
    std::size_t sessions = 0;
    std::size_t mismatches = 0;
};

// Replays the first `users` x `sessions_per_user` sessions of the simulation
// both in-process and over HTTP on a loopback port, comparing verdicts.
parity_report check_wire_parity(std::shared_ptr<const knowledge_base> kb, const simulation_config& config,
                                std::size_t users, std::size_t sessions_per_user);

void print_cohort_table(const std::vector<cohort_result>& rows, std::ostream& out);

} // namespace zeta
