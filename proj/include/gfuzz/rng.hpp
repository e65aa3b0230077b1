// Deterministic splittable RNG.  Randomized suites derive one stream per
// trial index from the user seed, so results do not depend on scheduling
// and trials can be partitioned across workers.

#pragma once

#include <cstdint>

namespace gfuzz {

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Uniform in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
};

inline SplitMix64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
    SplitMix64 mix(seed ^ (0x1234567b9ULL + trial * 0x9e3779b97f4a7c15ULL));
    mix.next();
    return mix;
}

} // namespace gfuzz
