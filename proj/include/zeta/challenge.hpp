#pragma once

#include "zeta/kb.hpp"
#include "zeta/secret.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zeta {

struct plan_entry {
    std::string attribute;
    bool expected = false;

    bool operator==(const plan_entry&) const = default;
};

// Written whenever a plan runs out and is reshuffled; challenge reuse is
// auditable through these.
struct recycle_event {
    std::uint64_t generation = 0; // generation number after the reshuffle
    std::uint64_t seed = 0;       // seed of the reshuffle
    std::size_t carried = 0;      // entries taken from the old order in that draw

    bool operator==(const recycle_event&) const = default;
};

// Pre-generated, shuffled challenges of one user, consumed across sessions.
struct challenge_plan {
    std::vector<plan_entry> entries;
    std::size_t cursor = 0;
    std::uint64_t seed = 0;
    std::uint64_t generation = 0;
    std::vector<recycle_event> recycles;

    std::size_t remaining() const noexcept { return entries.size() - cursor; }

    bool operator==(const challenge_plan&) const = default;
};

struct challenge {
    std::size_t index = 0;
    std::string attribute;
    std::string label;

    bool operator==(const challenge&) const = default;
};

struct session_draw {
    std::vector<challenge> challenges;
    std::vector<bool> expected;
    std::optional<recycle_event> recycle;
};

// Every attribute of kb exactly once, shuffled by seed, with the secret's
// answer attached. Throws InvalidFormula.
challenge_plan build_plan(const knowledge_base& kb, const formula& secret, std::uint64_t seed);

// Takes the next n unused entries. A plan that runs short is reshuffled with
// a derived seed (recorded as a recycle_event) and the draw continues from
// the new order, skipping nothing but placing this session's earlier picks
// last so no attribute repeats within the session.
// Throws PlanTooSmall if n exceeds the plan length, PreconditionError if n is 0.
session_draw draw_session_challenges(challenge_plan& plan, const knowledge_base& kb, std::size_t n);

} // namespace zeta
