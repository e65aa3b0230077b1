#include <catch2/catch_amalgamated.hpp>

#include "gfuzz/numerics.hpp"
#include "gfuzz/rng.hpp"

using namespace gfuzz;

namespace {

ExtReal fin(std::int64_t n, std::int64_t d = 1) { return ExtReal(Rational(n, d)); }

ExtReal random_extreal(SplitMix64& rng, bool allow_inf = true) {
    if (allow_inf && rng.unit() < 0.15) return ExtReal::infinity();
    return fin(static_cast<std::int64_t>(rng.below(24)), 1 + static_cast<std::int64_t>(rng.below(6)));
}

Grade random_grade(SplitMix64& rng, MonoidId m) {
    switch (m) {
        case MonoidId::Unit: return Grade::unit_of(m);
        case MonoidId::ED: return Grade::ed(2.0 * rng.unit(), rng.unit());
        default: return Grade::scalar(m, 3.0 * rng.unit());
    }
}

} // namespace

TEST_CASE("rational arithmetic is exact and normalized") {
    Rational third(1, 3), sixth(1, 6);
    REQUIRE(third + sixth == Rational(1, 2));
    REQUIRE(Rational(2, 4) == Rational(1, 2));
    REQUIRE(Rational(-2, -4) == Rational(1, 2));
    REQUIRE((Rational(3, 7) * Rational(7, 3)) == Rational(1));
    REQUIRE(Rational::parse("0.25") == Rational(1, 4));
    REQUIRE(Rational::parse("3/12") == Rational(1, 4));
    REQUIRE(Rational::from_double(0.5) == Rational(1, 2));
    REQUIRE(Rational::from_double(0.1).to_double() == 0.1);
    REQUIRE_THROWS_AS(Rational(1, 0), Error);
}

TEST_CASE("ext_add follows the absorption rule") {
    REQUIRE(ext_add(fin(2), fin(3)) == fin(5));
    REQUIRE(ext_add(ExtReal::infinity(), fin(0)) == ExtReal::infinity());
    REQUIRE(ext_add(fin(0), fin(0)) == fin(0));
}

TEST_CASE("ext_mul absorbs infinity on both sides, including zero") {
    REQUIRE(ext_mul(fin(2), fin(3)) == fin(6));
    // 0 * inf = inf, as stipulated; this differs from the usual measure-theory
    // convention and matters for scaled contexts.
    REQUIRE(ext_mul(fin(0), ExtReal::infinity()) == ExtReal::infinity());
    REQUIRE(ext_mul(ExtReal::infinity(), fin(0)) == ExtReal::infinity());
    REQUIRE(ext_mul(fin(1), fin(7)) == fin(7));
}

TEST_CASE("extended reals are totally ordered with inf on top") {
    REQUIRE(fin(3) < ExtReal::infinity());
    REQUIRE(!(ExtReal::infinity() < ExtReal::infinity()));
    REQUIRE(fin(1, 2) < fin(2, 3));
    REQUIRE(ext_max(fin(1), ExtReal::infinity()).is_infinite());
    REQUIRE(ExtReal::parse("inf").is_infinite());
    REQUIRE(ExtReal::parse("1/2") == fin(1, 2));
    REQUIRE(ExtReal::infinity().str() == "inf");
    REQUIRE(fin(3, 2).str() == "3/2");
    REQUIRE_THROWS_AS(ExtReal(Rational(-1)), Error);
}

TEST_CASE("ext ops are commutative, associative, monotone; inf absorbs") {
    for (std::uint64_t t = 0; t < 300; ++t) {
        SplitMix64 rng = trial_rng(7, t);
        ExtReal a = random_extreal(rng), b = random_extreal(rng), c = random_extreal(rng);
        REQUIRE(ext_add(a, b) == ext_add(b, a));
        REQUIRE(ext_mul(a, b) == ext_mul(b, a));
        REQUIRE(ext_add(ext_add(a, b), c) == ext_add(a, ext_add(b, c)));
        REQUIRE(ext_mul(ext_mul(a, b), c) == ext_mul(a, ext_mul(b, c)));
        if (a <= b) {
            REQUIRE(ext_add(a, c) <= ext_add(b, c));
            REQUIRE(ext_mul(a, c) <= ext_mul(b, c));
        }
        REQUIRE(ext_add(a, ExtReal::infinity()).is_infinite());
        REQUIRE(ext_mul(a, ExtReal::infinity()).is_infinite());
    }
}

TEST_CASE("grade composition matches the four monoid formulas") {
    REQUIRE(grade_compose(Grade::ed(1.0, 0.1), Grade::ed(1.0, 0.1)) == Grade::ed(2.0, 0.2));
    REQUIRE(grade_compose(Grade::scalar(MonoidId::XD, 1.0), Grade::scalar(MonoidId::XD, 1.0)) ==
            Grade::scalar(MonoidId::XD, 3.0));
    REQUIRE(grade_compose(Grade::scalar(MonoidId::HD, 3.0), Grade::scalar(MonoidId::HD, 4.0)) ==
            Grade::scalar(MonoidId::HD, 5.0));
    REQUIRE(grade_compose(Grade::scalar(MonoidId::KL, 1.5), Grade::scalar(MonoidId::KL, 2.0)) ==
            Grade::scalar(MonoidId::KL, 3.5));
    REQUIRE(grade_compose(Grade::unit_of(MonoidId::Unit), Grade::unit_of(MonoidId::Unit)) ==
            Grade::unit_of(MonoidId::Unit));
    REQUIRE_THROWS_AS(grade_compose(Grade::ed(1, 0), Grade::scalar(MonoidId::KL, 1)),
                      MonoidMismatch);
}

TEST_CASE("grade order is componentwise") {
    REQUIRE(grade_leq(Grade::ed(1.0, 0.1), Grade::ed(2.0, 0.1)));
    REQUIRE(!grade_leq(Grade::scalar(MonoidId::KL, 2.0), Grade::scalar(MonoidId::KL, 1.0)));
    REQUIRE(!grade_leq(Grade::ed(1.0, 0.2), Grade::ed(2.0, 0.1)));
    REQUIRE(grade_leq(Grade::unit_of(MonoidId::Unit), Grade::unit_of(MonoidId::Unit)));
    REQUIRE_THROWS_AS(grade_leq(Grade::ed(1, 0), Grade::scalar(MonoidId::HD, 1)), MonoidMismatch);
}

TEST_CASE("grade monoids: associativity, unit, monotone composition") {
    const MonoidId monoids[] = {MonoidId::Unit, MonoidId::ED, MonoidId::KL, MonoidId::XD,
                                MonoidId::HD};
    for (MonoidId m : monoids) {
        for (std::uint64_t t = 0; t < 200; ++t) {
            SplitMix64 rng = trial_rng(11 + static_cast<int>(m), t);
            Grade a = random_grade(rng, m), b = random_grade(rng, m), c = random_grade(rng, m);
            Grade left = grade_compose(grade_compose(a, b), c);
            Grade right = grade_compose(a, grade_compose(b, c));
            // HD introduces square roots; everything else is representable
            double tol = m == MonoidId::HD ? 1e-12 : 1e-13;
            REQUIRE_THAT(left.eps(), Catch::Matchers::WithinAbs(right.eps(), tol));
            REQUIRE_THAT(left.delta(), Catch::Matchers::WithinAbs(right.delta(), tol));

            Grade unit = Grade::unit_of(m);
            REQUIRE(grade_compose(a, unit) == a);
            REQUIRE(grade_compose(unit, a) == a);

            REQUIRE(grade_leq(a, a)); // reflexive
            if (grade_leq(a, b) && grade_leq(b, c)) REQUIRE(grade_leq(a, c));
            if (grade_leq(a, b)) {
                REQUIRE(grade_leq(grade_compose(a, c), grade_compose(b, c)));
                REQUIRE(grade_leq(grade_compose(c, a), grade_compose(c, b)));
            }
        }
    }
}

TEST_CASE("grade and double rendering") {
    REQUIRE(Grade::ed(1.0, 0.1).str() == "(1.0,0.1)@ED");
    REQUIRE(Grade::scalar(MonoidId::KL, 0.5).str() == "0.5@KL");
    REQUIRE(format_double(2.0) == "2.0");
    REQUIRE(format_double(0.2) == "0.2");
    for (std::uint64_t t = 0; t < 200; ++t) {
        SplitMix64 rng = trial_rng(13, t);
        double v = rng.unit() * std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
        REQUIRE(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}
