#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace zeta {

// numerator / 2^exponent, kept exact so threshold comparisons never depend
// on rounding. numerator <= 2^64, exponent <= 64.
class dyadic_probability {
public:
    dyadic_probability(unsigned __int128 numerator, unsigned exponent);

    unsigned __int128 numerator() const noexcept { return numerator_; }
    unsigned exponent() const noexcept { return exponent_; }
    double to_double() const noexcept;

    // p <= threshold, decided exactly against the binary value of threshold.
    bool at_most(double threshold) const;

    // Lowest terms, e.g. "13/16777216".
    std::string fraction() const;
    // Lowest terms with a power-of-two denominator, e.g. "13/2^24".
    std::string power_fraction() const;

    // Equal as rationals.
    friend bool operator==(const dyadic_probability& a, const dyadic_probability& b);

private:
    unsigned __int128 numerator_;
    unsigned exponent_;
};

inline constexpr std::size_t max_challenge_count = 64;

// Acceptance probability of a uniform random responder answering n balanced
// challenges when up to e errors are tolerated: sum_{i<=e} C(n,i) / 2^n.
// Throws DomainError unless 1 <= n <= 64 and e <= n.
dyadic_probability guess_probability(std::size_t n, std::size_t e);

// Smallest n >= e+1 with guess_probability(n, e) <= threshold.
// Throws DomainError for threshold outside (0, 1) or when no n <= 64 works.
std::size_t min_challenges(double threshold, std::size_t e);

struct security_policy {
    double guessing_threshold = 1e-6;
    std::size_t allowed_errors = 1;
    std::size_t challenge_count = 25;
    double tolerance = 0.05;

    bool operator==(const security_policy&) const = default;
};

// Derives challenge_count from the threshold.
security_policy make_policy(double threshold, std::size_t allowed_errors, double tolerance = 0.05);

// The policy whose minimal challenge count is exactly n for e allowed errors;
// its threshold is guess_probability(n, e).
security_policy policy_for_counts(std::size_t n, std::size_t e, double tolerance = 0.05);

struct verdict {
    bool accepted = false;
    std::size_t errors_observed = 0;
    std::size_t challenges_answered = 0;

    bool operator==(const verdict&) const = default;
};

// Throws LengthMismatch unless both lists have policy.challenge_count entries.
verdict decide(const security_policy& policy, const std::vector<bool>& expected, const std::vector<bool>& answered);

} // namespace zeta
