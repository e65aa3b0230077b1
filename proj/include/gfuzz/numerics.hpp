// Extended non-negative reals and grading monoids.
//
// ExtReal is the sensitivity scalar domain: exact non-negative rationals
// extended with a greatest element `inf`.  Both addition and multiplication
// treat `inf` as absorbing, including 0 * inf = inf.  Grades are elements of
// one of five fixed composition monoids used to annotate monadic types.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gfuzz {

// Error with a stable machine-readable code; `what()` carries the prose.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct MonoidMismatch : Error {
    explicit MonoidMismatch(const std::string& msg) : Error("monoid-mismatch", msg) {}
};

namespace detail {

inline std::int64_t checked_i64(__int128 v, const char* ctx) {
    if (v > INT64_MAX || v < INT64_MIN)
        throw Error("rational-overflow", std::string("rational overflow in ") + ctx);
    return static_cast<std::int64_t>(v);
}

} // namespace detail

// Exact rational on int64 with gcd normalization; denominator always > 0.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    Rational(std::int64_t num, std::int64_t den) { init(num, den); }
    Rational(std::int64_t n) : num_(n), den_(1) {} // NOLINT: implicit by design

    static Rational from_double(double v) {
        if (!std::isfinite(v)) throw Error("rational-domain", "non-finite double");
        // Doubles are dyadic rationals; peel the exponent exactly.
        int exp = 0;
        double frac = std::frexp(v, &exp); // v = frac * 2^exp, |frac| in [0.5, 1)
        std::int64_t mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
        exp -= 53;
        Rational r(mant, 1);
        while (exp > 0) { r = r * Rational(2, 1); --exp; }
        while (exp < 0) { r = r / Rational(2, 1); ++exp; }
        return r;
    }

    // Accepts "p/q", integers, and plain decimals ("0.25" -> 1/4).
    static Rational parse(const std::string& text);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational operator+(const Rational& o) const {
        __int128 n = static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_;
        __int128 d = static_cast<__int128>(den_) * o.den_;
        return make(n, d);
    }
    Rational operator-(const Rational& o) const {
        __int128 n = static_cast<__int128>(num_) * o.den_ - static_cast<__int128>(o.num_) * den_;
        __int128 d = static_cast<__int128>(den_) * o.den_;
        return make(n, d);
    }
    Rational operator*(const Rational& o) const {
        return make(static_cast<__int128>(num_) * o.num_, static_cast<__int128>(den_) * o.den_);
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw Error("rational-domain", "division by zero");
        return make(static_cast<__int128>(num_) * o.den_, static_cast<__int128>(den_) * o.num_);
    }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const {
        return static_cast<__int128>(num_) * o.den_ < static_cast<__int128>(o.num_) * den_;
    }
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    static Rational make(__int128 n, __int128 d) {
        Rational r;
        if (d == 0) throw Error("rational-domain", "zero denominator");
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n;
        __int128 g = gcd128(a, d);
        if (g > 1) { n /= g; d /= g; }
        r.num_ = detail::checked_i64(n, "normalize");
        r.den_ = detail::checked_i64(d, "normalize");
        return r;
    }
    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }
    void init(std::int64_t n, std::int64_t d) {
        Rational r = make(n, d);
        num_ = r.num_;
        den_ = r.den_;
    }

    std::int64_t num_;
    std::int64_t den_;
};

inline Rational Rational::parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        std::int64_t p = std::stoll(text.substr(0, slash));
        std::int64_t q = std::stoll(text.substr(slash + 1));
        return Rational(p, q);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(text), 1);
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::size_t frac_len = text.size() - dot - 1;
    if (frac_len > 17) throw Error("rational-domain", "decimal literal too long: " + text);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    return Rational(std::stoll(digits), den);
}

// Non-negative rational extended with infinity.  `inf` absorbs under + and *
// in both operand positions; in particular 0 * inf = inf.
class ExtReal {
public:
    ExtReal() : inf_(false), value_() {}
    ExtReal(Rational v) : inf_(false), value_(v) { // NOLINT: implicit by design
        if (v < Rational(0, 1)) throw Error("extreal-domain", "negative sensitivity");
    }
    ExtReal(std::int64_t v) : ExtReal(Rational(v, 1)) {} // NOLINT

    static ExtReal infinity() {
        ExtReal r;
        r.inf_ = true;
        return r;
    }
    static ExtReal parse(const std::string& text) {
        if (text == "inf") return infinity();
        return ExtReal(Rational::parse(text));
    }

    bool is_infinite() const { return inf_; }
    bool is_zero() const { return !inf_ && value_.is_zero(); }
    const Rational& finite_value() const {
        if (inf_) throw Error("extreal-domain", "finite_value() on inf");
        return value_;
    }
    double to_double() const { return inf_ ? INFINITY : value_.to_double(); }

    friend ExtReal ext_add(const ExtReal& a, const ExtReal& b) {
        if (a.inf_ || b.inf_) return infinity();
        return ExtReal(a.value_ + b.value_);
    }
    friend ExtReal ext_mul(const ExtReal& a, const ExtReal& b) {
        if (a.inf_ || b.inf_) return infinity();
        return ExtReal(a.value_ * b.value_);
    }
    // Exact division, used by the let-bang rule; rhs must be finite nonzero.
    friend ExtReal ext_div(const ExtReal& a, const ExtReal& b) {
        if (b.inf_ || b.value_.is_zero())
            throw Error("extreal-domain", "ext_div by zero or inf");
        if (a.inf_) return infinity();
        return ExtReal(a.value_ / b.value_);
    }

    bool operator==(const ExtReal& o) const {
        if (inf_ != o.inf_) return false;
        return inf_ || value_ == o.value_;
    }
    bool operator!=(const ExtReal& o) const { return !(*this == o); }
    bool operator<(const ExtReal& o) const {
        if (inf_) return false;
        if (o.inf_) return true;
        return value_ < o.value_;
    }
    bool operator<=(const ExtReal& o) const { return *this < o || *this == o; }
    bool operator>(const ExtReal& o) const { return o < *this; }
    bool operator>=(const ExtReal& o) const { return o <= *this; }

    std::string str() const { return inf_ ? "inf" : value_.str(); }

private:
    bool inf_;
    Rational value_;
};

inline ExtReal ext_max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }

enum class MonoidId { Unit, ED, KL, XD, HD };

inline const char* monoid_name(MonoidId m) {
    switch (m) {
        case MonoidId::Unit: return "UNIT";
        case MonoidId::ED: return "ED";
        case MonoidId::KL: return "KL";
        case MonoidId::XD: return "XD";
        case MonoidId::HD: return "HD";
    }
    return "?";
}

// Element of one of the five grading monoids.  ED carries an (eps, delta)
// pair composing by pairwise addition; KL composes by +, XD by
// a + b + a*b, HD by sqrt(a^2 + b^2); UNIT is the trivial monoid.
class Grade {
public:
    static Grade unit_of(MonoidId m) {
        Grade g;
        g.id_ = m;
        g.a_ = 0.0;
        g.b_ = 0.0;
        return g;
    }
    static Grade ed(double eps, double delta) {
        require_nonneg(eps, "eps");
        require_nonneg(delta, "delta");
        Grade g;
        g.id_ = MonoidId::ED;
        g.a_ = eps;
        g.b_ = delta;
        return g;
    }
    static Grade scalar(MonoidId m, double alpha) {
        if (m != MonoidId::KL && m != MonoidId::XD && m != MonoidId::HD)
            throw Error("grade-domain", "scalar grade requires KL/XD/HD");
        require_nonneg(alpha, "alpha");
        Grade g;
        g.id_ = m;
        g.a_ = alpha;
        return g;
    }

    MonoidId monoid() const { return id_; }
    double eps() const { return a_; }
    double delta() const { return b_; }
    double alpha() const { return a_; }

    bool operator==(const Grade& o) const { return id_ == o.id_ && a_ == o.a_ && b_ == o.b_; }
    bool operator!=(const Grade& o) const { return !(*this == o); }

    std::string str() const;

private:
    static void require_nonneg(double v, const char* name) {
        if (!(v >= 0.0)) throw Error("grade-domain", std::string(name) + " must be >= 0");
    }

    MonoidId id_ = MonoidId::Unit;
    double a_ = 0.0;
    double b_ = 0.0;
};

inline void require_same_monoid(const Grade& a, const Grade& b, const char* ctx) {
    if (a.monoid() != b.monoid())
        throw MonoidMismatch(std::string(ctx) + ": " + monoid_name(a.monoid()) + " vs " +
                             monoid_name(b.monoid()));
}

inline Grade grade_compose(const Grade& a, const Grade& b) {
    require_same_monoid(a, b, "grade_compose");
    switch (a.monoid()) {
        case MonoidId::Unit: return Grade::unit_of(MonoidId::Unit);
        case MonoidId::ED: return Grade::ed(a.eps() + b.eps(), a.delta() + b.delta());
        case MonoidId::KL: return Grade::scalar(MonoidId::KL, a.alpha() + b.alpha());
        case MonoidId::XD:
            return Grade::scalar(MonoidId::XD, a.alpha() + b.alpha() + a.alpha() * b.alpha());
        case MonoidId::HD:
            return Grade::scalar(MonoidId::HD,
                                 std::sqrt(a.alpha() * a.alpha() + b.alpha() * b.alpha()));
    }
    throw Error("grade-domain", "unreachable");
}

inline bool grade_leq(const Grade& a, const Grade& b) {
    require_same_monoid(a, b, "grade_leq");
    switch (a.monoid()) {
        case MonoidId::Unit: return true;
        case MonoidId::ED: return a.eps() <= b.eps() && a.delta() <= b.delta();
        default: return a.alpha() <= b.alpha();
    }
}

// Componentwise join; sound by grading subsumption (used to merge branches).
inline Grade grade_join(const Grade& a, const Grade& b) {
    require_same_monoid(a, b, "grade_join");
    switch (a.monoid()) {
        case MonoidId::Unit: return a;
        case MonoidId::ED: return Grade::ed(std::max(a.eps(), b.eps()), std::max(a.delta(), b.delta()));
        default: return Grade::scalar(a.monoid(), std::max(a.alpha(), b.alpha()));
    }
}

// Shortest decimal representation that parses back to the same double.
// Integral values keep one trailing ".0" so grades read as reals.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string s(buf);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

inline std::string Grade::str() const {
    switch (id_) {
        case MonoidId::Unit: return "1@UNIT";
        case MonoidId::ED: return "(" + format_double(a_) + "," + format_double(b_) + ")@ED";
        default: return format_double(a_) + "@" + monoid_name(id_);
    }
}

// Divergence families a monadic type can be graded by.  MD and SD carry the
// trivial monoid; ED carries (eps, delta) pairs; the rest carry scalars.
enum class DivFamily { MD, SD, ED, KL, XD, HD };

inline MonoidId monoid_of(DivFamily f) {
    switch (f) {
        case DivFamily::MD:
        case DivFamily::SD: return MonoidId::Unit;
        case DivFamily::ED: return MonoidId::ED;
        case DivFamily::KL: return MonoidId::KL;
        case DivFamily::XD: return MonoidId::XD;
        case DivFamily::HD: return MonoidId::HD;
    }
    return MonoidId::Unit;
}

inline const char* family_name(DivFamily f) {
    switch (f) {
        case DivFamily::MD: return "MD";
        case DivFamily::SD: return "SD";
        case DivFamily::ED: return "ED";
        case DivFamily::KL: return "KL";
        case DivFamily::XD: return "XD";
        case DivFamily::HD: return "HD";
    }
    return "?";
}

inline bool parse_family(const std::string& s, DivFamily& out) {
    if (s == "MD") out = DivFamily::MD;
    else if (s == "SD") out = DivFamily::SD;
    else if (s == "ED") out = DivFamily::ED;
    else if (s == "KL") out = DivFamily::KL;
    else if (s == "XD") out = DivFamily::XD;
    else if (s == "HD") out = DivFamily::HD;
    else return false;
    return true;
}

} // namespace gfuzz
