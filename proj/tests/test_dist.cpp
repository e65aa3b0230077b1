#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "gfuzz/dist.hpp"
#include "gfuzz/divergence.hpp"
#include "support.hpp"

using namespace gfuzz;
using Catch::Matchers::WithinAbs;

TEST_CASE("dirac is an exact point mass and the left unit of bind") {
    Dist<int> d = dirac(3);
    REQUIRE(d.size() == 1);
    REQUIRE(d.mode() == NumericMode::Exact);
    REQUIRE(d.prob_exact(3).rat() == Rational(1));

    auto f = [](int x) { return bernoulli(Rational(x, 4)); };
    REQUIRE(kleisli_bind<int, bool>(dirac(3), f) == f(3)); // bind(dirac v, f) = f(v)
    REQUIRE(dirac(std::string("()")).prob("()") == 1.0);
}

TEST_CASE("bind: right unit and constant kernels") {
    SplitMix64 rng = trial_rng(21, 0);
    Dist<int> mu = testsup::random_exact_dist(rng, 5);
    REQUIRE(kleisli_bind<int, int>(mu, [](int x) { return dirac(x); }) == mu);

    Dist<int> nu = testsup::random_exact_dist(rng, 4);
    typename Dist<int>::Support half;
    half.emplace(0, Prob::exact(Rational(1, 2)));
    half.emplace(1, Prob::exact(Rational(1, 2)));
    Dist<int> coin = Dist<int>::from_entries(std::move(half));
    REQUIRE(kleisli_bind<int, int>(coin, [&](int) { return nu; }) == nu);
}

TEST_CASE("bind against the summation formula, evaluated by hand") {
    // mu = {0: 1/2, 1: 1/2}, f = bernoulli; the four terms of
    // sum_x f(x)(y) mu(x) give P(T) = 0*1/2 + 1*1/2 = 1/2, P(F) = 1/2.
    typename Dist<int>::Support s;
    s.emplace(0, Prob::exact(Rational(1, 2)));
    s.emplace(1, Prob::exact(Rational(1, 2)));
    Dist<int> mu = Dist<int>::from_entries(std::move(s));
    Dist<bool> out = kleisli_bind<int, bool>(mu, [](int x) { return bernoulli(Rational(x)); });
    REQUIRE(out.prob_exact(true).rat() == Rational(1, 2));
    REQUIRE(out.prob_exact(false).rat() == Rational(1, 2));
    REQUIRE(out.mode() == NumericMode::Exact);
}

TEST_CASE("bernoulli clamps its parameter") {
    Dist<bool> fair = bernoulli(0.5);
    REQUIRE(fair.prob_exact(true).rat() == Rational(1, 2));
    REQUIRE(fair.prob_exact(false).rat() == Rational(1, 2));

    Dist<bool> high = bernoulli(1.5);
    REQUIRE(high.prob(true) == 1.0);
    REQUIRE(high.prob(false) == 0.0);
    REQUIRE(high.size() == 1); // zero entries are not stored

    Dist<bool> low = bernoulli(-0.2);
    REQUIRE(low.prob(true) == 0.0);
    REQUIRE(low.prob(false) == 1.0);
}

TEST_CASE("monad laws hold exactly in exact mode") {
    for (std::uint64_t t = 0; t < 200; ++t) {
        SplitMix64 rng = trial_rng(22, t);
        int nx = 1 + static_cast<int>(rng.below(6));
        int ny = 1 + static_cast<int>(rng.below(6));
        Dist<int> mu = testsup::random_exact_dist(rng, nx);
        std::vector<Dist<int>> fk, gk;
        for (int i = 0; i < nx; ++i) fk.push_back(testsup::random_exact_dist(rng, ny));
        for (int i = 0; i < ny; ++i) gk.push_back(testsup::random_exact_dist(rng, 4));
        auto f = [&](int x) { return fk[static_cast<std::size_t>(x)]; };
        auto g = [&](int y) { return gk[static_cast<std::size_t>(y)]; };

        REQUIRE(kleisli_bind<int, int>(mu, [](int x) { return dirac(x); }) == mu);
        Dist<int> assoc_left = kleisli_bind<int, int>(kleisli_bind<int, int>(mu, f), g);
        Dist<int> assoc_right = kleisli_bind<int, int>(
            mu, [&](int x) { return kleisli_bind<int, int>(f(x), g); });
        REQUIRE(assoc_left == assoc_right);
    }
}

TEST_CASE("monad laws hold within 1e-9 total variation in float mode") {
    for (std::uint64_t t = 0; t < 200; ++t) {
        SplitMix64 rng = trial_rng(23, t);
        int nx = 1 + static_cast<int>(rng.below(6));
        int ny = 1 + static_cast<int>(rng.below(6));
        Dist<int> mu = testsup::random_float_dist(rng, nx);
        std::vector<Dist<int>> fk, gk;
        for (int i = 0; i < nx; ++i) fk.push_back(testsup::random_float_dist(rng, ny));
        for (int i = 0; i < ny; ++i) gk.push_back(testsup::random_float_dist(rng, 4));
        auto f = [&](int x) { return fk[static_cast<std::size_t>(x)]; };
        auto g = [&](int y) { return gk[static_cast<std::size_t>(y)]; };

        REQUIRE(stat_dist(kleisli_bind<int, int>(mu, [](int x) { return dirac(x); }), mu) <= 1e-9);
        Dist<int> assoc_left = kleisli_bind<int, int>(kleisli_bind<int, int>(mu, f), g);
        Dist<int> assoc_right = kleisli_bind<int, int>(
            mu, [&](int x) { return kleisli_bind<int, int>(f(x), g); });
        REQUIRE(stat_dist(assoc_left, assoc_right) <= 1e-9);
    }
}

TEST_CASE("grid validation") {
    Grid g;
    REQUIRE(Grid{-8, 8, 0.5}.cells() == 32);
    REQUIRE_THROWS_AS((Grid{0, 1, 0.6}.cells()), Error);      // not an integer count
    REQUIRE_THROWS_AS((Grid{0, 1, 0.5}.cells()), Error);      // too coarse
    REQUIRE_THROWS_AS((Grid{1, 0, 0.1}.cells()), Error);      // inverted
    Grid parsed = Grid::parse("-12,12,0.05");
    REQUIRE(parsed.cells() == 480);
    REQUIRE(Grid::parse(parsed.str()).cells() == 480);
}

TEST_CASE("laplace grid: normalization, symmetry, analytic cell mass") {
    Grid g{-8, 8, 0.5};
    Dist<double> d = laplace_grid(0.0, 1.0, g);
    double total = 0.0;
    for (const auto& [v, p] : d.support()) total += p.value();
    REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));

    // even density: cell [t, t+step) mirrors [-t-step, -t)
    for (double t : {0.5, 1.0, 2.5, 5.0})
        REQUIRE_THAT(d.prob(t), WithinAbs(d.prob(-t - g.step), 1e-15));

    // mass of [0, 0.5) = (1 - e^{-1/2}) / 2, from the Laplace CDF
    REQUIRE_THAT(d.prob(0.0), WithinAbs(0.1967346701436833, 1e-15));

    REQUIRE_THROWS_AS(laplace_grid(0.0, -1.0, g), Error);
}

TEST_CASE("gaussian grid: normalization, unimodality, standard-normal cell") {
    Dist<double> d = gaussian_grid(0.0, 1.0, Grid{-8, 8, 1.0});
    double total = 0.0;
    for (const auto& [v, p] : d.support()) total += p.value();
    REQUIRE_THAT(total, WithinAbs(1.0, 1e-9));
    // mass of [0, 1) = Phi(1) - Phi(0)
    REQUIRE_THAT(d.prob(0.0), WithinAbs(0.3413447460685429, 1e-14));

    // the cell straddling the mean is maximal on a mean-centered grid
    Dist<double> centered = gaussian_grid(0.0, 1.0, Grid{-8.5, 8.5, 1.0});
    double best = 0.0;
    for (const auto& [v, p] : centered.support()) best = std::max(best, p.value());
    REQUIRE(centered.prob(-0.5) == best);
}

TEST_CASE("poisson truncation") {
    REQUIRE(poisson_trunc(0.0, 10) == dirac<std::uint64_t>(0));
    Dist<std::uint64_t> p1 = poisson_trunc(1.0, 40);
    REQUIRE_THAT(p1.prob(0), WithinAbs(0.36787944117144233, 1e-15));
    Dist<std::uint64_t> p2 = poisson_trunc(2.0, 60);
    REQUIRE_THAT(p2.prob(1), WithinAbs(0.2706705664732254, 1e-15));
    double total = 0.0;
    for (const auto& [v, p] : p2.support()) total += p.value();
    REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));
    REQUIRE_THROWS_AS(poisson_trunc(5.0, 3), Error); // tail mass >= 1e-12
    REQUIRE_NOTHROW(poisson_trunc(3.0, poisson_default_cutoff(3.0)));
}

TEST_CASE("distributions reject bad mass assignments") {
    typename Dist<int>::Support s;
    s.emplace(0, Prob::approx(0.7));
    s.emplace(1, Prob::approx(0.7));
    REQUIRE_THROWS_AS(Dist<int>::from_entries(std::move(s)), Error);

    typename Dist<int>::Support neg;
    neg.emplace(0, Prob::approx(-0.25));
    neg.emplace(1, Prob::approx(1.25));
    REQUIRE_THROWS_AS(Dist<int>::from_entries(std::move(neg)), Error);
}

TEST_CASE("map_support merges collisions and keeps exactness") {
    SplitMix64 rng = trial_rng(24, 0);
    Dist<int> mu = testsup::random_exact_dist(rng, 6);
    Dist<int> folded = map_support<int, int>(mu, [](int x) { return x / 2; });
    REQUIRE(folded.mode() == NumericMode::Exact);
    Rational sum(0);
    for (const auto& [v, p] : folded.support()) sum = sum + p.rat();
    REQUIRE(sum == Rational(1));
}

TEST_CASE("distribution file format round-trips") {
    std::istringstream in("# a coin\na\t1/2\nb\t0.25\nc\t1/4\n");
    Dist<std::string> d = read_dist(in);
    REQUIRE(d.mode() == NumericMode::Exact);
    REQUIRE(d.prob_exact("b").rat() == Rational(1, 4));

    std::ostringstream out;
    write_dist(out, d, [](const std::string& s) { return s; });
    std::istringstream back(out.str());
    REQUIRE(read_dist(back) == d);

    std::istringstream dup("a\t1/2\na\t1/2\n");
    REQUIRE_THROWS_AS(read_dist(dup), Error);
    std::istringstream garbled("a 1/2\n");
    REQUIRE_THROWS_AS(read_dist(garbled), Error);
}
