// Shared helpers for the test suites: file loading, random distribution
// generators, and the independent oracles used to cross-check library code.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gfuzz/dist.hpp"
#include "gfuzz/rng.hpp"

namespace testsup {

inline std::string program_path(const std::string& name) {
    return std::string(GFUZZ_PROGRAMS_DIR) + "/" + name;
}

inline std::string read_program(const std::string& name) {
    std::ifstream in(program_path(name));
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Exact distribution over {0..n-1} with small integer weights.
inline gfuzz::Dist<int> random_exact_dist(gfuzz::SplitMix64& rng, int n) {
    std::vector<std::int64_t> w(static_cast<std::size_t>(n));
    std::int64_t total = 0;
    for (auto& x : w) {
        x = static_cast<std::int64_t>(rng.below(9));
        total += x;
    }
    if (total == 0) {
        w[rng.below(static_cast<std::uint64_t>(n))] = 1;
        total = 1;
    }
    typename gfuzz::Dist<int>::Support s;
    for (int i = 0; i < n; ++i)
        if (w[static_cast<std::size_t>(i)] > 0)
            s.emplace(i, gfuzz::Prob::exact(gfuzz::Rational(w[static_cast<std::size_t>(i)], total)));
    return gfuzz::Dist<int>::from_entries(std::move(s));
}

// Float-mode distribution over {0..n-1}; zeros allowed unless full_support.
inline gfuzz::Dist<int> random_float_dist(gfuzz::SplitMix64& rng, int n,
                                          bool full_support = false) {
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& x : w) {
        x = (!full_support && rng.unit() < 0.3) ? 0.0 : 0.02 + rng.unit();
        total += x;
    }
    if (total == 0.0) {
        w[rng.below(static_cast<std::uint64_t>(n))] = 1.0;
        total = 1.0;
    }
    typename gfuzz::Dist<int>::Support s;
    for (int i = 0; i < n; ++i)
        if (w[static_cast<std::size_t>(i)] > 0.0)
            s.emplace(i, gfuzz::Prob::approx(w[static_cast<std::size_t>(i)] / total));
    return gfuzz::Dist<int>::from_entries(std::move(s));
}

} // namespace testsup
