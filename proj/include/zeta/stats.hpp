#pragma once

#include <cstddef>

namespace zeta {

struct interval {
    double low = 0.0;
    double high = 1.0;
};

// Wilson score interval for a binomial proportion; z = 1.96 gives 95%.
interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

// P[at most e errors in n independent challenges with error rate p].
double honest_accept_probability(std::size_t n, std::size_t e, double p);

} // namespace zeta
