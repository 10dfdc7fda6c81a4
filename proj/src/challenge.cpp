#include "zeta/challenge.hpp"

#include "zeta/error.hpp"
#include "zeta/rng.hpp"

#include <algorithm>
#include <unordered_set>

namespace zeta {

challenge_plan build_plan(const knowledge_base& kb, const formula& secret, std::uint64_t seed)
{
    validate_secret(kb, secret);
    const auto table = truth_table(kb, secret);

    challenge_plan plan;
    plan.seed = seed;
    plan.entries.reserve(kb.attribute_count());
    for (std::size_t a = 0; a < kb.attribute_count(); ++a)
        plan.entries.push_back({kb.attributes()[a].id, table(static_cast<Eigen::Index>(a))});

    rng_engine rng(derive_seed(seed, 0));
    shuffle(std::span<plan_entry>(plan.entries), rng);
    return plan;
}

session_draw draw_session_challenges(challenge_plan& plan, const knowledge_base& kb, std::size_t n)
{
    if (n == 0)
        throw PreconditionError("a session needs at least one challenge");
    if (n > plan.entries.size())
        throw PlanTooSmall("session of " + std::to_string(n) + " challenges exceeds plan of " +
                           std::to_string(plan.entries.size()) + " attributes");

    session_draw draw;
    draw.challenges.reserve(n);
    draw.expected.reserve(n);

    auto take = [&](std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            const auto& e = plan.entries[plan.cursor++];
            const auto& attr = kb.attributes()[kb.attribute_index(e.attribute)];
            draw.challenges.push_back({draw.challenges.size(), attr.id, attr.label});
            draw.expected.push_back(e.expected);
        }
    };

    const auto carried = std::min(n, plan.remaining());
    take(carried);
    if (carried == n)
        return draw;

    recycle_event event;
    event.generation = plan.generation + 1;
    event.seed = derive_seed(plan.seed, event.generation);
    event.carried = carried;

    rng_engine rng(event.seed);
    shuffle(std::span<plan_entry>(plan.entries), rng);
    std::unordered_set<std::string> used;
    for (const auto& c : draw.challenges)
        used.insert(c.attribute);
    std::stable_partition(plan.entries.begin(), plan.entries.end(),
                          [&](const plan_entry& e) { return !used.contains(e.attribute); });

    plan.generation = event.generation;
    plan.cursor = 0;
    plan.recycles.push_back(event);
    draw.recycle = event;

    take(n - carried);
    return draw;
}

} // namespace zeta
