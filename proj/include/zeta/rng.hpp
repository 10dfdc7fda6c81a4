#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace zeta {

// Portable randomness helpers. The standard distributions and std::shuffle
// are implementation-defined, so seeded results would differ between
// standard libraries; everything seeded in this project goes through here.

using rng_engine = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of stream `index` under `seed`. Distinct (seed, index) pairs give
// unrelated streams, so per-trial work can be split across threads.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

// Uniform integer in [0, bound). bound must be positive.
inline std::uint64_t uniform_below(rng_engine& rng, std::uint64_t bound)
{
    const std::uint64_t limit = -bound % bound; // 2^64 mod bound
    for (;;) {
        const std::uint64_t x = rng();
        const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        if (static_cast<std::uint64_t>(m) >= limit)
            return static_cast<std::uint64_t>(m >> 64);
    }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(rng_engine& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool coin_flip(rng_engine& rng) { return (rng() >> 63) != 0; }

template <typename T>
void shuffle(std::span<T> items, rng_engine& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

} // namespace zeta
