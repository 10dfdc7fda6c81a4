#include "zeta/attacker.hpp"

#include "zeta/challenge.hpp"
#include "zeta/error.hpp"
#include "zeta/rng.hpp"

#include <numeric>
#include <ostream>

namespace zeta {

namespace {

struct indexed_transcript {
    std::vector<Eigen::Index> attributes;
    std::vector<bool> responses;
};

std::vector<indexed_transcript> index_transcripts(const knowledge_base& kb, const std::vector<transcript>& ts)
{
    std::vector<indexed_transcript> out;
    out.reserve(ts.size());
    for (const auto& t : ts) {
        indexed_transcript it;
        for (const auto& o : t.entries) {
            it.attributes.push_back(static_cast<Eigen::Index>(kb.attribute_index(o.attribute)));
            it.responses.push_back(o.response);
        }
        out.push_back(std::move(it));
    }
    return out;
}

bool consistent(const truth_vector& table, const std::vector<indexed_transcript>& ts, std::size_t slack)
{
    for (const auto& t : ts) {
        std::size_t disagreements = 0;
        for (std::size_t i = 0; i < t.attributes.size(); ++i)
            if (table(t.attributes[i]) != t.responses[i] && ++disagreements > slack)
                return false;
    }
    return true;
}

void check_trials(const knowledge_base& kb, const security_policy& policy, std::size_t trials)
{
    if (trials == 0)
        throw PreconditionError("impersonation estimate needs at least one trial");
    if (policy.challenge_count == 0 || policy.challenge_count > kb.attribute_count())
        throw PlanTooSmall("session of " + std::to_string(policy.challenge_count) +
                           " challenges does not fit a knowledge base of " + std::to_string(kb.attribute_count()) +
                           " attributes");
}

// Simulated sessions against the true secret. start_trial(rng) is called once
// per trial and returns the responder used for that trial's challenges.
template <typename StartTrial>
impersonation_estimate run_trials(const knowledge_base& kb, const truth_vector& truth, const security_policy& policy,
                                  std::size_t trials, std::uint64_t seed, StartTrial&& start_trial)
{
    std::vector<Eigen::Index> order(kb.attribute_count());
    impersonation_estimate out;
    out.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        rng_engine rng(derive_seed(seed, t));
        auto respond = start_trial(rng);
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::size_t errors = 0;
        for (std::size_t i = 0; i < policy.challenge_count; ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_below(rng, order.size() - i));
            std::swap(order[i], order[j]);
            if (respond(rng, order[i]) != truth(order[i]))
                ++errors;
        }
        if (errors <= policy.allowed_errors)
            ++out.accepted;
    }
    out.estimate = static_cast<double>(out.accepted) / static_cast<double>(trials);
    out.ci = wilson_interval(out.accepted, trials);
    return out;
}

} // namespace

hypothesis_set full_hypothesis_space(const knowledge_base& kb, const generation_limits& limits)
{
    return {enumerate_formulas(kb, limits), limits};
}

hypothesis_set filter_consistent(const knowledge_base& kb, const hypothesis_set& hypotheses,
                                 const std::vector<transcript>& transcripts, std::size_t slack)
{
    const auto indexed = index_transcripts(kb, transcripts);
    hypothesis_set out{{}, hypotheses.limits};
    for (const auto& h : hypotheses.candidates)
        if (consistent(truth_table(kb, h), indexed, slack))
            out.candidates.push_back(h);
    return out;
}

impersonation_estimate impersonation_success(const knowledge_base& kb, const hypothesis_set& surviving,
                                             const formula& true_secret, const security_policy& policy,
                                             std::size_t trials, std::uint64_t seed)
{
    if (surviving.empty())
        throw EmptyHypothesisSet("no surviving hypotheses to impersonate with");
    check_trials(kb, policy, trials);

    const auto truth = truth_table(kb, true_secret);
    std::vector<truth_vector> tables;
    tables.reserve(surviving.size());
    for (const auto& h : surviving.candidates)
        tables.push_back(truth_table(kb, h));

    return run_trials(kb, truth, policy, trials, seed, [&](rng_engine& rng) {
        const auto& table = tables[uniform_below(rng, tables.size())];
        return [&table](rng_engine&, Eigen::Index attribute) { return static_cast<bool>(table(attribute)); };
    });
}

impersonation_estimate blind_guess_success(const knowledge_base& kb, const formula& true_secret,
                                           const security_policy& policy, std::size_t trials, std::uint64_t seed)
{
    check_trials(kb, policy, trials);
    const auto truth = truth_table(kb, true_secret);
    return run_trials(kb, truth, policy, trials, seed, [](rng_engine&) {
        return [](rng_engine& rng, Eigen::Index) { return coin_flip(rng); };
    });
}

std::vector<curve_row> observation_curve(const knowledge_base& kb, const formula& true_secret,
                                         const security_policy& policy, std::size_t max_observations,
                                         std::size_t slack, std::uint64_t seed, const curve_options& options)
{
    if (!(options.user_error_rate >= 0.0 && options.user_error_rate <= 1.0))
        throw PreconditionError("user error rate must lie in [0, 1]");

    auto surviving = full_hypothesis_space(kb, options.limits);
    auto plan = build_plan(kb, true_secret, derive_seed(seed, 0));
    rng_engine user_rng(derive_seed(seed, 1));

    auto estimate = [&](std::size_t k) {
        const auto trial_seed = derive_seed(seed, 1000 + k);
        if (surviving.empty())
            return blind_guess_success(kb, true_secret, policy, options.trials, trial_seed);
        return impersonation_success(kb, surviving, true_secret, policy, options.trials, trial_seed);
    };

    std::vector<curve_row> rows;
    rows.push_back({0, surviving.size(), estimate(0)});
    for (std::size_t k = 1; k <= max_observations; ++k) {
        const auto draw = draw_session_challenges(plan, kb, policy.challenge_count);
        transcript t;
        for (std::size_t i = 0; i < draw.challenges.size(); ++i) {
            const bool slip = options.user_error_rate > 0.0 && uniform_unit(user_rng) < options.user_error_rate;
            t.entries.push_back({draw.challenges[i].attribute, draw.expected[i] != slip});
        }
        // Consistency is a per-transcript condition, so filtering the
        // previous survivors with the new transcript equals filtering the
        // full space with all k of them.
        surviving = filter_consistent(kb, surviving, {t}, slack);
        rows.push_back({k, surviving.size(), estimate(k)});
    }
    return rows;
}

void write_curve_csv(const std::vector<curve_row>& rows, std::ostream& out)
{
    out << "observations,surviving,estimate,ci_low,ci_high\n";
    const auto precision = out.precision(10);
    for (const auto& r : rows)
        out << r.observations << ',' << r.surviving << ',' << r.impersonation.estimate << ','
            << r.impersonation.ci.low << ',' << r.impersonation.ci.high << '\n';
    out.precision(precision);
}

} // namespace zeta
