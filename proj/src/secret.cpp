#include "zeta/secret.hpp"

#include "zeta/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <iterator>
#include <span>
#include <unordered_set>

namespace zeta {

struct formula::node {
    op kind;
    std::string concept_id;
    std::vector<formula> children;
    std::size_t leaves;
    std::size_t depth;
};

formula formula::leaf(std::string concept_id)
{
    return formula(std::make_shared<const node>(node{op::leaf, std::move(concept_id), {}, 1, 0}));
}

formula formula::negation(formula operand)
{
    const auto leaves = operand.leaf_count();
    const auto depth = operand.depth() + 1;
    return formula(std::make_shared<const node>(node{op::negation, {}, {std::move(operand)}, leaves, depth}));
}

formula formula::conjunction(formula lhs, formula rhs)
{
    const auto leaves = lhs.leaf_count() + rhs.leaf_count();
    const auto depth = std::max(lhs.depth(), rhs.depth()) + 1;
    return formula(std::make_shared<const node>(
        node{op::conjunction, {}, {std::move(lhs), std::move(rhs)}, leaves, depth}));
}

formula formula::disjunction(formula lhs, formula rhs)
{
    const auto leaves = lhs.leaf_count() + rhs.leaf_count();
    const auto depth = std::max(lhs.depth(), rhs.depth()) + 1;
    return formula(std::make_shared<const node>(
        node{op::disjunction, {}, {std::move(lhs), std::move(rhs)}, leaves, depth}));
}

formula::op formula::kind() const noexcept { return node_->kind; }

const std::string& formula::concept_id() const
{
    if (node_->kind != op::leaf)
        throw std::logic_error("formula::concept_id on a non-leaf");
    return node_->concept_id;
}

const formula& formula::operand() const
{
    if (node_->kind != op::negation)
        throw std::logic_error("formula::operand on a non-negation");
    return node_->children[0];
}

const formula& formula::lhs() const
{
    if (node_->children.size() != 2)
        throw std::logic_error("formula::lhs on a non-binary node");
    return node_->children[0];
}

const formula& formula::rhs() const
{
    if (node_->children.size() != 2)
        throw std::logic_error("formula::rhs on a non-binary node");
    return node_->children[1];
}

std::size_t formula::leaf_count() const noexcept { return node_->leaves; }
std::size_t formula::depth() const noexcept { return node_->depth; }

namespace {

void collect_ids(const formula& f, std::vector<std::string>& out)
{
    switch (f.kind()) {
    case formula::op::leaf:
        out.push_back(f.concept_id());
        return;
    case formula::op::negation:
        collect_ids(f.operand(), out);
        return;
    default:
        collect_ids(f.lhs(), out);
        collect_ids(f.rhs(), out);
    }
}

} // namespace

std::vector<std::string> formula::concept_ids() const
{
    std::vector<std::string> ids;
    collect_ids(*this, ids);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

bool operator==(const formula& a, const formula& b)
{
    if (a.node_ == b.node_)
        return true;
    if (a.kind() != b.kind())
        return false;
    if (a.kind() == formula::op::leaf)
        return a.concept_id() == b.concept_id();
    return a.node_->children == b.node_->children;
}

// Text form

std::string to_string(const formula& f)
{
    switch (f.kind()) {
    case formula::op::leaf:
        return f.concept_id();
    case formula::op::negation:
        return "NOT(" + to_string(f.operand()) + ")";
    case formula::op::conjunction:
        return "AND(" + to_string(f.lhs()) + ", " + to_string(f.rhs()) + ")";
    case formula::op::disjunction:
        return "OR(" + to_string(f.lhs()) + ", " + to_string(f.rhs()) + ")";
    }
    return {};
}

namespace {

class formula_parser {
public:
    explicit formula_parser(std::string_view text) : text_(text) {}

    formula parse()
    {
        auto f = expression();
        skip_space();
        if (pos_ != text_.size())
            fail("trailing input");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("formula: " + what + " at offset " + std::to_string(pos_) + " in '" +
                         std::string(text_) + "'");
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    void expect(char c)
    {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string word()
    {
        skip_space();
        const auto start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ',')
            ++pos_;
        auto w = text_.substr(start, pos_ - start);
        while (!w.empty() && std::isspace(static_cast<unsigned char>(w.back())))
            w.remove_suffix(1);
        return std::string(w);
    }

    formula expression()
    {
        const auto w = word();
        if (w.empty())
            fail("expected a concept or connective");
        skip_space();
        const bool call = pos_ < text_.size() && text_[pos_] == '(';
        if (!call)
            return formula::leaf(w);
        ++pos_;
        if (w == "NOT") {
            auto operand = expression();
            expect(')');
            return formula::negation(std::move(operand));
        }
        if (w == "AND" || w == "OR") {
            auto lhs = expression();
            expect(',');
            auto rhs = expression();
            expect(')');
            return w == "AND" ? formula::conjunction(std::move(lhs), std::move(rhs))
                              : formula::disjunction(std::move(lhs), std::move(rhs));
        }
        fail("unknown connective '" + w + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

formula parse_formula(std::string_view text)
{
    return formula_parser(text).parse();
}

// Evaluation

namespace {

std::size_t leaf_index(const knowledge_base& kb, const std::string& id)
{
    if (auto c = kb.find_concept(id))
        return *c;
    throw InvalidFormula("formula references unknown concept '" + id + "'");
}

bool eval_at(const knowledge_base& kb, const formula& f, std::size_t attribute)
{
    switch (f.kind()) {
    case formula::op::leaf:
        return kb.related(attribute, leaf_index(kb, f.concept_id()));
    case formula::op::negation:
        return !eval_at(kb, f.operand(), attribute);
    case formula::op::conjunction:
        return eval_at(kb, f.lhs(), attribute) && eval_at(kb, f.rhs(), attribute);
    case formula::op::disjunction:
        return eval_at(kb, f.lhs(), attribute) || eval_at(kb, f.rhs(), attribute);
    }
    return false;
}

void check_leaves(const knowledge_base& kb, const formula& f)
{
    for (const auto& id : f.concept_ids())
        leaf_index(kb, id);
}

} // namespace

void validate_secret(const knowledge_base& kb, const formula& f)
{
    const auto ids = f.concept_ids();
    for (const auto& id : ids)
        leaf_index(kb, id);
    if (ids.size() < 2)
        throw InvalidFormula("secret '" + to_string(f) + "' needs at least two distinct concepts");
}

bool evaluate(const knowledge_base& kb, const formula& f, std::size_t attribute)
{
    if (attribute >= kb.attribute_count())
        throw UnknownId("attribute index " + std::to_string(attribute) + " out of range");
    check_leaves(kb, f);
    return eval_at(kb, f, attribute);
}

bool evaluate(const knowledge_base& kb, const formula& f, std::string_view attribute)
{
    return evaluate(kb, f, kb.attribute_index(attribute));
}

truth_vector truth_table(const knowledge_base& kb, const formula& f)
{
    switch (f.kind()) {
    case formula::op::leaf:
        return kb.concept_column(leaf_index(kb, f.concept_id()));
    case formula::op::negation:
        return !truth_table(kb, f.operand());
    case formula::op::conjunction:
        return truth_table(kb, f.lhs()) && truth_table(kb, f.rhs());
    case formula::op::disjunction:
        return truth_table(kb, f.lhs()) || truth_table(kb, f.rhs());
    }
    return {};
}

balance_report balance_of(const truth_vector& table)
{
    balance_report r;
    r.yes_count = static_cast<std::size_t>(table.count());
    r.no_count = static_cast<std::size_t>(table.size()) - r.yes_count;
    r.yes_ratio = table.size() == 0 ? 0.0 : static_cast<double>(r.yes_count) / static_cast<double>(table.size());
    return r;
}

balance_report balance(const knowledge_base& kb, const formula& f)
{
    return balance_of(truth_table(kb, f));
}

// Generation

namespace {

std::vector<formula::op> binary_ops(const generation_limits& limits)
{
    std::vector<formula::op> ops;
    if (limits.allow_and)
        ops.push_back(formula::op::conjunction);
    if (limits.allow_or)
        ops.push_back(formula::op::disjunction);
    return ops;
}

// Least depth that fits `leaves` leaves.
std::size_t min_depth(std::size_t leaves)
{
    std::size_t d = 0;
    while ((std::size_t{1} << d) < leaves)
        ++d;
    return d;
}

formula random_tree(std::span<const std::size_t> picks, std::size_t depth_budget, const knowledge_base& kb,
                    const generation_limits& limits, const std::vector<formula::op>& ops, rng_engine& rng)
{
    if (picks.size() == 1) {
        auto f = formula::leaf(kb.concepts()[picks[0]].id);
        if (limits.allow_not && depth_budget >= 1 && coin_flip(rng))
            return formula::negation(std::move(f));
        return f;
    }

    if (limits.allow_not && !limits.literal_not_only && depth_budget > min_depth(picks.size()) &&
        uniform_below(rng, 4) == 0) {
        return formula::negation(random_tree(picks, depth_budget - 1, kb, limits, ops, rng));
    }

    const std::size_t child_cap = std::size_t{1} << (depth_budget - 1);
    std::vector<std::size_t> splits;
    for (std::size_t left = 1; left < picks.size(); ++left)
        if (left <= child_cap && picks.size() - left <= child_cap)
            splits.push_back(left);
    const auto left = splits[uniform_below(rng, splits.size())];
    const auto kind = ops[uniform_below(rng, ops.size())];
    auto lhs = random_tree(picks.first(left), depth_budget - 1, kb, limits, ops, rng);
    auto rhs = random_tree(picks.subspan(left), depth_budget - 1, kb, limits, ops, rng);
    return kind == formula::op::conjunction ? formula::conjunction(std::move(lhs), std::move(rhs))
                                            : formula::disjunction(std::move(lhs), std::move(rhs));
}

} // namespace

formula random_formula(const knowledge_base& kb, const generation_limits& limits, rng_engine& rng)
{
    const auto ops = binary_ops(limits);
    std::vector<std::size_t> sizes;
    for (auto k = std::max<std::size_t>(limits.min_leaves, 2); k <= limits.max_leaves; ++k)
        if (k <= kb.concept_count() && min_depth(k) <= limits.max_depth && !ops.empty())
            sizes.push_back(k);
    if (sizes.empty())
        throw PreconditionError("generation limits admit no formula over " + std::to_string(kb.concept_count()) +
                                " concepts");

    const auto leaves = sizes[uniform_below(rng, sizes.size())];
    std::vector<std::size_t> concepts(kb.concept_count());
    std::iota(concepts.begin(), concepts.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `leaves` slots become a uniform sample.
    for (std::size_t i = 0; i < leaves; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, concepts.size() - i));
        std::swap(concepts[i], concepts[j]);
    }
    return random_tree(std::span<const std::size_t>(concepts.data(), leaves), limits.max_depth, kb, limits, ops,
                       rng);
}

formula generate_secret(const knowledge_base& kb, const generation_limits& limits, double tolerance,
                        std::uint64_t seed, std::size_t min_each_side)
{
    if (!(tolerance >= 0.0 && tolerance <= 0.5))
        throw PreconditionError("balance tolerance must lie in [0, 0.5]");
    if (kb.attribute_count() == 0)
        throw PreconditionError("knowledge base has no attributes");
    if (kb.concept_count() < 2)
        throw NoBalancedSecret("knowledge base has fewer than two concepts");

    rng_engine rng(seed);
    for (std::size_t attempt = 0; attempt < limits.search_budget; ++attempt) {
        auto candidate = random_formula(kb, limits, rng);
        const auto report = balance(kb, candidate);
        if (std::abs(report.yes_ratio - 0.5) <= tolerance && report.yes_count >= min_each_side &&
            report.no_count >= min_each_side)
            return candidate;
    }
    throw NoBalancedSecret("no secret within " + std::to_string(limits.search_budget) +
                           " candidates met balance tolerance " + std::to_string(tolerance));
}

// Enumeration

namespace {

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b)
{
    return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b)
{
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
        return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

// Shared structure of the counting and enumerating recursions: formulas with
// exactly `leaves` leaves and depth <= `depth`, where NOT never wraps NOT.
class space_counter {
public:
    space_counter(std::size_t concepts, const generation_limits& limits)
        : concepts_(concepts), limits_(limits), ops_(binary_ops(limits).size())
    {
    }

    std::uint64_t total(std::size_t leaves, std::size_t depth)
    {
        if (leaves == 1)
            return limits_.allow_not && depth >= 1 ? saturating_mul(2, concepts_) : concepts_;
        auto n = binary(leaves, depth);
        if (limits_.allow_not && !limits_.literal_not_only && depth >= 1)
            n = saturating_add(n, binary(leaves, depth - 1));
        return n;
    }

private:
    std::uint64_t binary(std::size_t leaves, std::size_t depth)
    {
        if (depth == 0)
            return 0;
        const auto key = std::make_pair(leaves, depth);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
        std::uint64_t n = 0;
        for (std::size_t left = 1; left < leaves; ++left)
            n = saturating_add(n, saturating_mul(ops_, saturating_mul(total(left, depth - 1),
                                                                      total(leaves - left, depth - 1))));
        memo_[key] = n;
        return n;
    }

    std::uint64_t concepts_;
    const generation_limits& limits_;
    std::uint64_t ops_;
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> memo_;
};

struct enumerated {
    formula f;
    truth_vector table;
    std::vector<std::size_t> concepts; // distinct, sorted
};

std::vector<std::size_t> merge_concepts(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    std::vector<std::size_t> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

struct table_hash {
    std::size_t operator()(const std::vector<std::uint64_t>& bits) const noexcept
    {
        std::uint64_t h = 0;
        for (auto w : bits)
            h = mix_seed(h ^ w);
        return static_cast<std::size_t>(h);
    }
};

std::vector<std::uint64_t> pack(const truth_vector& table)
{
    std::vector<std::uint64_t> bits((static_cast<std::size_t>(table.size()) + 63) / 64, 0);
    for (Eigen::Index i = 0; i < table.size(); ++i)
        if (table(i))
            bits[static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (static_cast<std::size_t>(i) % 64);
    return bits;
}

class enumerator {
public:
    enumerator(const knowledge_base& kb, const generation_limits& limits)
        : kb_(kb), limits_(limits), ops_(binary_ops(limits))
    {
    }

    template <typename Visit>
    void visit(std::size_t leaves, std::size_t depth, Visit&& fn)
    {
        if (leaves == 1) {
            for (const auto& item : items(1, depth))
                fn(item);
            return;
        }
        visit_binary(leaves, depth, fn);
        if (limits_.allow_not && !limits_.literal_not_only && depth >= 1)
            visit_binary(leaves, depth - 1, [&](const enumerated& inner) {
                fn(enumerated{formula::negation(inner.f), !inner.table, inner.concepts});
            });
    }

private:
    template <typename Visit>
    void visit_binary(std::size_t leaves, std::size_t depth, Visit&& fn)
    {
        if (depth == 0)
            return;
        for (std::size_t left = 1; left < leaves; ++left) {
            const auto& lhs_items = items(left, depth - 1);
            const auto& rhs_items = items(leaves - left, depth - 1);
            for (const auto kind : ops_)
                for (const auto& lhs : lhs_items)
                    for (const auto& rhs : rhs_items) {
                        if (kind == formula::op::conjunction)
                            fn(enumerated{formula::conjunction(lhs.f, rhs.f), lhs.table && rhs.table,
                                          merge_concepts(lhs.concepts, rhs.concepts)});
                        else
                            fn(enumerated{formula::disjunction(lhs.f, rhs.f), lhs.table || rhs.table,
                                          merge_concepts(lhs.concepts, rhs.concepts)});
                    }
        }
    }

    // Materialized sub-results, memoized by (leaves, depth).
    const std::vector<enumerated>& items(std::size_t leaves, std::size_t depth)
    {
        const auto key = std::make_pair(leaves, depth);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
        std::vector<enumerated> out;
        if (leaves == 1) {
            for (std::size_t c = 0; c < kb_.concept_count(); ++c)
                out.push_back({formula::leaf(kb_.concepts()[c].id), kb_.concept_column(c), {c}});
            if (limits_.allow_not && depth >= 1)
                for (std::size_t c = 0; c < kb_.concept_count(); ++c)
                    out.push_back({formula::negation(formula::leaf(kb_.concepts()[c].id)), !kb_.concept_column(c), {c}});
        } else {
            visit(leaves, depth, [&](const enumerated& e) { out.push_back(e); });
        }
        return memo_.emplace(key, std::move(out)).first->second;
    }

    const knowledge_base& kb_;
    const generation_limits& limits_;
    std::vector<formula::op> ops_;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<enumerated>> memo_;
};

} // namespace

std::uint64_t syntactic_space_size(std::size_t concept_count, const generation_limits& limits)
{
    if (binary_ops(limits).empty())
        return 0;
    space_counter counter(concept_count, limits);
    std::uint64_t n = 0;
    for (auto k = std::max<std::size_t>(limits.min_leaves, 2); k <= limits.max_leaves; ++k)
        n = saturating_add(n, counter.total(k, limits.max_depth));
    return n;
}

std::vector<formula> enumerate_formulas(const knowledge_base& kb, const generation_limits& limits)
{
    const auto space = syntactic_space_size(kb.concept_count(), limits);
    if (space > limits.enumeration_cap)
        throw LimitsTooLarge("hypothesis space of " + std::to_string(space) + " formulas exceeds cap " +
                             std::to_string(limits.enumeration_cap));

    std::vector<formula> out;
    if (space == 0)
        return out;
    std::unordered_set<std::vector<std::uint64_t>, table_hash> seen;
    enumerator gen(kb, limits);
    for (auto k = std::max<std::size_t>(limits.min_leaves, 2); k <= limits.max_leaves; ++k)
        gen.visit(k, limits.max_depth, [&](const enumerated& e) {
            if (e.concepts.size() >= 2 && seen.insert(pack(e.table)).second)
                out.push_back(e.f);
        });
    return out;
}

} // namespace zeta
