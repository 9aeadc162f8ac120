#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace simgap {

// splitmix64; integer-only state transitions so streams are identical on
// every platform.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1), 53 bits of mantissa
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Box-Muller, one variate per call
    double gaussian() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 == 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }
};

// Stateless per-id key for seeded random subset selection. Pure integer ops,
// so a (seed, id) pair maps to the same key on every platform.
inline std::uint64_t random_subset_key(std::uint64_t seed, std::uint64_t id) {
    SplitMix64 g(seed ^ (id * 0xd6e8feb86659fd93ULL));
    g.next();
    return g.next();
}

} // namespace simgap
