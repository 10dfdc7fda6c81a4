#pragma once

#include "zeta/kb.hpp"
#include "zeta/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace zeta {

// Boolean expression over concept ids: the user's memorized secret.
// Immutable value type; copies share structure.
class formula {
public:
    enum class op { leaf, negation, conjunction, disjunction };

    formula() = delete;

    static formula leaf(std::string concept_id);
    static formula negation(formula operand);
    static formula conjunction(formula lhs, formula rhs);
    static formula disjunction(formula lhs, formula rhs);

    op kind() const noexcept;
    // Only for leaves.
    const std::string& concept_id() const;
    // Only for negations.
    const formula& operand() const;
    // Only for conjunctions and disjunctions.
    const formula& lhs() const;
    const formula& rhs() const;

    std::size_t leaf_count() const noexcept;
    // Edges on the longest root-to-leaf path; a bare leaf has depth 0.
    std::size_t depth() const noexcept;
    // Distinct concept ids, sorted.
    std::vector<std::string> concept_ids() const;

    friend bool operator==(const formula& a, const formula& b);

private:
    struct node;
    explicit formula(std::shared_ptr<const node> n) : node_(std::move(n)) {}
    std::shared_ptr<const node> node_;
};

inline formula leaf(std::string concept_id) { return formula::leaf(std::move(concept_id)); }
inline formula negation(formula f) { return formula::negation(std::move(f)); }
inline formula conjunction(formula a, formula b) { return formula::conjunction(std::move(a), std::move(b)); }
inline formula disjunction(formula a, formula b) { return formula::disjunction(std::move(a), std::move(b)); }

// Canonical prefix text, e.g. "OR(yellow, NOT(wheel))".
std::string to_string(const formula& f);
// Inverse of to_string; whitespace around tokens is ignored. Throws ParseError.
formula parse_formula(std::string_view text);

// Throws InvalidFormula unless every leaf names a concept of kb and at least
// two distinct concepts occur.
void validate_secret(const knowledge_base& kb, const formula& f);

// Whether the attribute is related to the secret. Throws UnknownId for an
// unknown attribute, InvalidFormula for a leaf naming an unknown concept.
bool evaluate(const knowledge_base& kb, const formula& f, std::string_view attribute);
bool evaluate(const knowledge_base& kb, const formula& f, std::size_t attribute);

// evaluate() over every attribute at once, as column operations on the
// incidence matrix.
truth_vector truth_table(const knowledge_base& kb, const formula& f);

struct balance_report {
    std::size_t yes_count = 0;
    std::size_t no_count = 0;
    double yes_ratio = 0.0;
};

balance_report balance(const knowledge_base& kb, const formula& f);
balance_report balance_of(const truth_vector& table);

struct generation_limits {
    std::size_t min_leaves = 2;
    std::size_t max_leaves = 3;
    std::size_t max_depth = 3;
    bool allow_and = true;
    bool allow_or = true;
    bool allow_not = true;
    // NOT only wraps single concepts.
    bool literal_not_only = true;
    // Random candidates tried by generate_secret before giving up.
    std::size_t search_budget = 10'000;
    // Upper bound on syntactic formulas enumerate_formulas will visit.
    std::uint64_t enumeration_cap = 5'000'000;
};

inline constexpr double default_balance_tolerance = 0.05;

// Rejection-samples random formulas within limits (distinct concepts per
// leaf) until one has |yes_ratio - 0.5| <= tolerance and at least
// min_each_side yes and no attributes. Deterministic in seed.
// Throws NoBalancedSecret when the search budget runs out, PreconditionError
// for an out-of-range tolerance or an empty kb.
formula generate_secret(const knowledge_base& kb, const generation_limits& limits,
                        double tolerance, std::uint64_t seed, std::size_t min_each_side = 0);

// Draws one random formula within limits; used by generate_secret and tests.
formula random_formula(const knowledge_base& kb, const generation_limits& limits, rng_engine& rng);

// Every syntactically valid formula within limits, one representative per
// truth table over kb's attributes (the first one met in enumeration order).
// Throws LimitsTooLarge if the syntactic space exceeds limits.enumeration_cap.
std::vector<formula> enumerate_formulas(const knowledge_base& kb, const generation_limits& limits);

// Number of syntactic formulas enumerate_formulas would visit.
std::uint64_t syntactic_space_size(std::size_t concept_count, const generation_limits& limits);

} // namespace zeta
