#include "zeta/verifier.hpp"

#include "zeta/error.hpp"

#include <cmath>

namespace zeta {

namespace {

using u128 = unsigned __int128;

std::string to_decimal(u128 v)
{
    if (v == 0)
        return "0";
    std::string s;
    while (v != 0) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return s;
}

// Strips common factors of two.
std::pair<u128, unsigned> reduced(u128 numerator, unsigned exponent)
{
    while (exponent > 0 && numerator % 2 == 0 && numerator != 0) {
        numerator /= 2;
        --exponent;
    }
    if (numerator == 0)
        exponent = 0;
    return {numerator, exponent};
}

} // namespace

dyadic_probability::dyadic_probability(u128 numerator, unsigned exponent)
    : numerator_(numerator), exponent_(exponent)
{
    if (exponent > max_challenge_count || numerator > (u128{1} << exponent))
        throw DomainError("dyadic probability out of range");
}

double dyadic_probability::to_double() const noexcept
{
    return std::ldexp(static_cast<double>(numerator_), -static_cast<int>(exponent_));
}

bool dyadic_probability::at_most(double threshold) const
{
    if (std::isnan(threshold))
        return false;
    if (threshold >= 1.0)
        return true;
    if (threshold < 0.0)
        return false;
    // threshold * 2^exponent is exact in binary floating point, and below
    // 2^64, so the floor compares exactly against the integer numerator.
    const double scaled = std::floor(std::ldexp(threshold, static_cast<int>(exponent_)));
    return numerator_ <= static_cast<u128>(scaled);
}

std::string dyadic_probability::fraction() const
{
    const auto [num, exp] = reduced(numerator_, exponent_);
    return to_decimal(num) + "/" + to_decimal(u128{1} << exp);
}

std::string dyadic_probability::power_fraction() const
{
    const auto [num, exp] = reduced(numerator_, exponent_);
    return to_decimal(num) + "/2^" + std::to_string(exp);
}

bool operator==(const dyadic_probability& a, const dyadic_probability& b)
{
    return reduced(a.numerator_, a.exponent_) == reduced(b.numerator_, b.exponent_);
}

dyadic_probability guess_probability(std::size_t n, std::size_t e)
{
    if (n < 1 || n > max_challenge_count)
        throw DomainError("challenge count must lie in [1, 64], got " + std::to_string(n));
    if (e > n)
        throw DomainError("allowed errors " + std::to_string(e) + " exceed challenge count " + std::to_string(n));

    // Row n of Pascal's triangle; C(64, 32) < 2^63.
    std::vector<u128> row{1};
    for (std::size_t i = 1; i <= n; ++i) {
        std::vector<u128> next(i + 1, 1);
        for (std::size_t k = 1; k < i; ++k)
            next[k] = row[k - 1] + row[k];
        row = std::move(next);
    }
    u128 accepted = 0;
    for (std::size_t i = 0; i <= e; ++i)
        accepted += row[i];
    return dyadic_probability(accepted, static_cast<unsigned>(n));
}

std::size_t min_challenges(double threshold, std::size_t e)
{
    if (!(threshold > 0.0 && threshold < 1.0))
        throw DomainError("guessing threshold must lie in (0, 1)");
    for (std::size_t n = e + 1; n <= max_challenge_count; ++n)
        if (guess_probability(n, e).at_most(threshold))
            return n;
    throw DomainError("no challenge count up to 64 reaches threshold " + std::to_string(threshold) + " with " +
                      std::to_string(e) + " allowed errors");
}

security_policy make_policy(double threshold, std::size_t allowed_errors, double tolerance)
{
    if (!(tolerance >= 0.0 && tolerance <= 0.5))
        throw DomainError("balance tolerance must lie in [0, 0.5]");
    security_policy p;
    p.guessing_threshold = threshold;
    p.allowed_errors = allowed_errors;
    p.challenge_count = min_challenges(threshold, allowed_errors);
    p.tolerance = tolerance;
    return p;
}

security_policy policy_for_counts(std::size_t n, std::size_t e, double tolerance)
{
    if (e >= n)
        throw DomainError("allowed errors must be below the challenge count");
    auto p = make_policy(guess_probability(n, e).to_double(), e, tolerance);
    if (p.challenge_count != n)
        throw DomainError("policy (" + std::to_string(n) + ", " + std::to_string(e) + ") is not minimal");
    return p;
}

verdict decide(const security_policy& policy, const std::vector<bool>& expected, const std::vector<bool>& answered)
{
    if (expected.size() != policy.challenge_count || answered.size() != policy.challenge_count)
        throw LengthMismatch("verdict needs " + std::to_string(policy.challenge_count) + " answers, got " +
                             std::to_string(answered.size()) + " against " + std::to_string(expected.size()) +
                             " expected");
    verdict v;
    v.challenges_answered = answered.size();
    for (std::size_t i = 0; i < answered.size(); ++i)
        if (answered[i] != expected[i])
            ++v.errors_observed;
    v.accepted = v.errors_observed <= policy.allowed_errors;
    return v;
}

} // namespace zeta
