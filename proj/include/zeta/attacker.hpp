#pragma once

#include "zeta/kb.hpp"
#include "zeta/secret.hpp"
#include "zeta/stats.hpp"
#include "zeta/verifier.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace zeta {

// What an observer captures from one session: challenges and responses in
// the clear.
struct observation {
    std::string attribute;
    bool response = false;
};

struct transcript {
    std::string user_id;
    std::vector<observation> entries;
};

// Candidate secrets, pairwise distinct as truth tables over the kb.
struct hypothesis_set {
    std::vector<formula> candidates;
    generation_limits limits;

    std::size_t size() const noexcept { return candidates.size(); }
    bool empty() const noexcept { return candidates.empty(); }
};

// enumerate_formulas packaged as the observer's starting hypotheses.
hypothesis_set full_hypothesis_space(const knowledge_base& kb, const generation_limits& limits);

// Keeps the hypotheses that disagree with every transcript in at most
// `slack` entries. Throws UnknownId for an unknown attribute.
hypothesis_set filter_consistent(const knowledge_base& kb, const hypothesis_set& hypotheses,
                                 const std::vector<transcript>& transcripts, std::size_t slack);

struct impersonation_estimate {
    double estimate = 0.0;
    interval ci;
    std::size_t trials = 0;
    std::size_t accepted = 0;
};

// Monte Carlo: each trial picks a surviving hypothesis uniformly, answers a
// fresh draw of policy.challenge_count distinct attributes with it, and is
// scored against the true secret. Trial t uses the stream derive_seed(seed, t).
// Throws EmptyHypothesisSet, PreconditionError (trials == 0), PlanTooSmall.
impersonation_estimate impersonation_success(const knowledge_base& kb, const hypothesis_set& surviving,
                                             const formula& true_secret, const security_policy& policy,
                                             std::size_t trials, std::uint64_t seed);

// Same protocol for a responder that flips a fair coin per challenge.
impersonation_estimate blind_guess_success(const knowledge_base& kb, const formula& true_secret,
                                           const security_policy& policy, std::size_t trials,
                                           std::uint64_t seed);

struct curve_options {
    generation_limits limits;
    std::size_t trials = 2000;
    // Per-challenge error rate of the observed honest user.
    double user_error_rate = 0.0;
};

struct curve_row {
    std::size_t observations = 0;
    std::size_t surviving = 0;
    impersonation_estimate impersonation;
};

// Row k filters the hypothesis space with the first k observed honest
// sessions, drawn from a challenge plan of the true secret, and estimates
// the impersonation rate of an observer holding the survivors. An observer
// left with no hypothesis falls back to blind guessing.
std::vector<curve_row> observation_curve(const knowledge_base& kb, const formula& true_secret,
                                         const security_policy& policy, std::size_t max_observations,
                                         std::size_t slack, std::uint64_t seed, const curve_options& options = {});

// Header "observations,surviving,estimate,ci_low,ci_high" then one line per row.
void write_curve_csv(const std::vector<curve_row>& rows, std::ostream& out);

} // namespace zeta
