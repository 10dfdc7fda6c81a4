#include "zeta/stats.hpp"

#include "zeta/error.hpp"

#include <algorithm>
#include <cmath>

namespace zeta {

interval wilson_interval(std::size_t successes, std::size_t trials, double z)
{
    if (trials == 0)
        return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double honest_accept_probability(std::size_t n, std::size_t e, double p)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("error rate must lie in [0, 1]");
    double sum = 0.0;
    double binom = 1.0; // C(n, i)
    for (std::size_t i = 0; i <= std::min(e, n); ++i) {
        sum += binom * std::pow(p, static_cast<double>(i)) * std::pow(1 - p, static_cast<double>(n - i));
        binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    return std::min(sum, 1.0);
}

} // namespace zeta
