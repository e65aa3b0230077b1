// Exact finite-support discrete distributions with monad structure, plus the
// primitive mechanisms discretized onto grids.
//
// Probabilities stay exact rationals as long as every input is exact;
// grid mechanisms work in doubles.  Cell masses come from CDF differences,
// so discretization is a deterministic post-processing of the continuous
// mechanism and divergence bounds transfer unchanged.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gfuzz/numerics.hpp"

namespace gfuzz {

enum class NumericMode { Exact, Float };

// Probability value: exact rational when constructible, double otherwise.
// Arithmetic keeps exactness when both operands are exact; rational overflow
// silently degrades to the double path.
class Prob {
public:
    Prob() : exact_(true), rat_(0), val_(0.0) {}

    static Prob exact(const Rational& r) {
        Prob p;
        p.exact_ = true;
        p.rat_ = r;
        p.val_ = r.to_double();
        return p;
    }
    static Prob approx(double v) {
        Prob p;
        p.exact_ = false;
        p.val_ = v;
        return p;
    }

    bool is_exact() const { return exact_; }
    double value() const { return val_; }
    const Rational& rat() const {
        if (!exact_) throw Error("prob-mode", "rat() on inexact probability");
        return rat_;
    }

    Prob operator+(const Prob& o) const {
        if (exact_ && o.exact_) {
            try {
                return exact(rat_ + o.rat_);
            } catch (const Error&) { /* overflow: fall through */
            }
        }
        return approx(val_ + o.val_);
    }
    Prob operator*(const Prob& o) const {
        if (exact_ && o.exact_) {
            try {
                return exact(rat_ * o.rat_);
            } catch (const Error&) {
            }
        }
        return approx(val_ * o.val_);
    }

private:
    bool exact_;
    Rational rat_;
    double val_;
};

// Finite-support probability distribution over an ordered outcome type.
// Invariants: no zero-probability entries; Exact mode sums to exactly 1,
// Float mode to 1 within 1e-9.
template <typename T>
class Dist {
public:
    using Support = std::map<T, Prob>;

    Dist() = default;

    static Dist from_entries(Support entries) {
        Dist d;
        bool all_exact = true;
        Rational exact_sum(0);
        double float_sum = 0.0;
        for (auto it = entries.begin(); it != entries.end();) {
            const Prob& p = it->second;
            if (p.value() < 0.0) throw Error("dist-invariant", "negative probability");
            if (p.value() == 0.0 && (!p.is_exact() || p.rat().is_zero())) {
                it = entries.erase(it);
                continue;
            }
            all_exact = all_exact && p.is_exact();
            if (p.is_exact()) exact_sum = exact_sum + p.rat();
            float_sum += p.value();
            ++it;
        }
        if (all_exact && exact_sum == Rational(1)) {
            d.mode_ = NumericMode::Exact;
        } else {
            if (std::abs(float_sum - 1.0) > 1e-9)
                throw Error("dist-invariant", "probabilities sum to " + format_double(float_sum));
            d.mode_ = NumericMode::Float;
        }
        d.support_ = std::move(entries);
        return d;
    }

    const Support& support() const { return support_; }
    NumericMode mode() const { return mode_; }
    std::size_t size() const { return support_.size(); }

    double prob(const T& v) const {
        auto it = support_.find(v);
        return it == support_.end() ? 0.0 : it->second.value();
    }
    Prob prob_exact(const T& v) const {
        auto it = support_.find(v);
        return it == support_.end() ? Prob() : it->second;
    }

    bool operator==(const Dist& o) const {
        if (mode_ != o.mode_ || support_.size() != o.support_.size()) return false;
        auto a = support_.begin();
        auto b = o.support_.begin();
        for (; a != support_.end(); ++a, ++b) {
            if (!(a->first == b->first)) return false;
            if (mode_ == NumericMode::Exact) {
                if (!(a->second.rat() == b->second.rat())) return false;
            } else if (a->second.value() != b->second.value()) {
                return false;
            }
        }
        return true;
    }

private:
    Support support_;
    NumericMode mode_ = NumericMode::Exact;
};

// Point mass.
template <typename T>
Dist<T> dirac(const T& v) {
    typename Dist<T>::Support s;
    s.emplace(v, Prob::exact(Rational(1)));
    return Dist<T>::from_entries(std::move(s));
}

// Kleisli lifting: f#(mu)(y) = sum_x f(x)(y) * mu(x).
template <typename T, typename U, typename F>
Dist<U> kleisli_bind(const Dist<T>& mu, F&& f) {
    typename Dist<U>::Support acc;
    for (const auto& [x, px] : mu.support()) {
        Dist<U> fx = f(x);
        for (const auto& [y, py] : fx.support()) {
            Prob w = px * py;
            auto it = acc.find(y);
            if (it == acc.end())
                acc.emplace(y, w);
            else
                it->second = it->second + w;
        }
    }
    return Dist<U>::from_entries(std::move(acc));
}

// Deterministic post-processing h# (pushforward along h).
template <typename T, typename U, typename H>
Dist<U> map_support(const Dist<T>& mu, H&& h) {
    typename Dist<U>::Support acc;
    for (const auto& [x, px] : mu.support()) {
        U y = h(x);
        auto it = acc.find(y);
        if (it == acc.end())
            acc.emplace(std::move(y), px);
        else
            it->second = it->second + px;
    }
    return Dist<U>::from_entries(std::move(acc));
}

// Biased coin; the parameter is clamped into [0, 1] as part of the definition.
inline Dist<bool> bernoulli(const Rational& p) {
    Rational zero(0), one(1);
    Rational q = p < zero ? zero : (one < p ? one : p);
    typename Dist<bool>::Support s;
    s.emplace(true, Prob::exact(q));
    s.emplace(false, Prob::exact(one - q));
    return Dist<bool>::from_entries(std::move(s));
}

inline Dist<bool> bernoulli(double p) { return bernoulli(Rational::from_double(p)); }

// Uniform half-open binning [lo, hi) with a fixed step; boundary cells absorb
// the two tails so grid distributions stay normalized.
struct Grid {
    double lo = -8.0;
    double hi = 8.0;
    double step = 0.05;
    std::size_t max_cells = 1000000;

    std::size_t cells() const {
        double n = (hi - lo) / step;
        double r = std::round(n);
        if (!(lo < hi) || !(step > 0))
            throw Error("grid-invalid", "need lo < hi and step > 0");
        if (std::abs(n - r) > 1e-6 * std::max(1.0, r))
            throw Error("grid-invalid", "(hi - lo) / step must be an integer");
        auto c = static_cast<std::size_t>(r);
        if (c > max_cells) throw Error("grid-invalid", "cell count exceeds maximum");
        if (c < 3) throw Error("grid-too-coarse", "grid needs at least 3 cells");
        return c;
    }
    double cell_value(std::size_t i) const { return lo + static_cast<double>(i) * step; }

    std::string str() const {
        return format_double(lo) + "," + format_double(hi) + "," + format_double(step);
    }
    static Grid parse(const std::string& text) {
        Grid g;
        auto c1 = text.find(',');
        auto c2 = text.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw Error("grid-invalid", "expected lo,hi,step");
        g.lo = std::strtod(text.substr(0, c1).c_str(), nullptr);
        g.hi = std::strtod(text.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
        g.step = std::strtod(text.substr(c2 + 1).c_str(), nullptr);
        g.cells();
        return g;
    }
};

namespace detail {

// Mass of [a, c) under Laplace(mu, b), evaluated piecewise so far tails do not
// cancel catastrophically.
inline double laplace_cell_mass(double a, double c, double mu, double b) {
    auto below = [&](double x, double y) { // both <= mu
        return 0.5 * (std::exp((y - mu) / b) - std::exp((x - mu) / b));
    };
    auto above = [&](double x, double y) { // both >= mu
        return 0.5 * (std::exp(-(x - mu) / b) - std::exp(-(y - mu) / b));
    };
    if (c <= mu) return below(a, c);
    if (a >= mu) return above(a, c);
    return below(a, mu) + above(mu, c);
}

// Mass of [a, c) under N(mu, sigma) via one-sided erfc differences.
inline double gaussian_cell_mass(double a, double c, double mu, double sigma) {
    double za = (a - mu) / (sigma * std::sqrt(2.0));
    double zc = (c - mu) / (sigma * std::sqrt(2.0));
    auto right = [](double x, double y) { // 0 <= x <= y
        return 0.5 * (std::erfc(x) - std::erfc(y));
    };
    if (za >= 0.0) return right(za, zc);
    if (zc <= 0.0) return right(-zc, -za);
    return right(0.0, -za) + right(0.0, zc);
}

template <typename MassFn>
Dist<double> grid_dist(const Grid& g, MassFn&& mass_below) {
    std::size_t n = g.cells();
    typename Dist<double>::Support s;
    double cum = 0.0; // mass of (-inf, current right edge)
    for (std::size_t i = 0; i < n; ++i) {
        double right = i + 1 == n ? INFINITY : g.cell_value(i + 1);
        double m = i + 1 == n ? 1.0 - cum : mass_below(g.cell_value(i), right);
        if (i == 0) m += mass_below(-INFINITY, g.cell_value(0)); // left tail
        cum += m;
        if (m > 0.0) s.emplace(g.cell_value(i), Prob::approx(m));
    }
    return Dist<double>::from_entries(std::move(s));
}

} // namespace detail

// Laplace mechanism noise truncated onto a grid: cell [x, x+step) receives
// F(x+step) - F(x); the boundary cells absorb both tails.
inline Dist<double> laplace_grid(double mu, double b, const Grid& g) {
    if (!(b > 0)) throw Error("mechanism-domain", "laplace scale must be > 0");
    return detail::grid_dist(g, [&](double a, double c) {
        if (a == -INFINITY) a = -1e300;
        if (c == INFINITY) c = 1e300;
        return detail::laplace_cell_mass(a, c, mu, b);
    });
}

inline Dist<double> gaussian_grid(double mu, double sigma, const Grid& g) {
    if (!(sigma > 0)) throw Error("mechanism-domain", "gaussian sigma must be > 0");
    return detail::grid_dist(g, [&](double a, double c) {
        if (a == -INFINITY) a = mu - 1e7 * sigma;
        if (c == INFINITY) c = mu + 1e7 * sigma;
        return detail::gaussian_cell_mass(a, c, mu, sigma);
    });
}

// Poisson(alpha) truncated to {0..n_max}; the residual tail is folded into
// the last point.  Rejects n_max values that leave tail mass >= 1e-12.
inline Dist<std::uint64_t> poisson_trunc(double alpha, std::uint64_t n_max) {
    if (!(alpha >= 0)) throw Error("mechanism-domain", "poisson rate must be >= 0");
    if (alpha == 0.0) return dirac<std::uint64_t>(0);
    typename Dist<std::uint64_t>::Support s;
    double p = std::exp(-alpha); // pmf(0)
    double cum = 0.0;
    for (std::uint64_t n = 0; n < n_max; ++n) {
        if (p > 0.0) s.emplace(n, Prob::approx(p));
        cum += p;
        p *= alpha / static_cast<double>(n + 1);
    }
    // p is now pmf(n_max); everything past it must be negligible before we
    // fold it into the last point.
    double tail_beyond = 1.0 - cum - p;
    if (tail_beyond >= 1e-12)
        throw Error("truncation-too-small", "poisson tail mass >= 1e-12 at n_max");
    double fold = 1.0 - cum;
    if (fold > 0.0) s.emplace(n_max, Prob::approx(fold));
    return Dist<std::uint64_t>::from_entries(std::move(s));
}

// Smallest adequate truncation point for the given rate.
inline std::uint64_t poisson_default_cutoff(double alpha) {
    double guess = alpha + 14.0 * std::sqrt(alpha) + 30.0;
    return static_cast<std::uint64_t>(guess);
}

// --- Distribution text format -----------------------------------------------
//
// One "value<TAB>probability" pair per line; '#' starts a comment; blank lines
// are ignored.  Probabilities are decimals or fractions "p/q".

inline Dist<std::string> read_dist(std::istream& in) {
    typename Dist<std::string>::Support s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto end = line.find_last_not_of(" \t\r");
        if (end == std::string::npos) continue;
        line = line.substr(0, end + 1);
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error("dist-file", "line " + std::to_string(lineno) + ": expected value<TAB>probability");
        std::string value = line.substr(0, tab);
        std::string prob = line.substr(tab + 1);
        auto ps = prob.find_first_not_of(" \t");
        prob = prob.substr(ps == std::string::npos ? prob.size() : ps);
        Prob p;
        try {
            p = Prob::exact(Rational::parse(prob));
        } catch (const std::exception&) {
            throw Error("dist-file", "line " + std::to_string(lineno) + ": bad probability '" + prob + "'");
        }
        if (s.count(value))
            throw Error("dist-file", "line " + std::to_string(lineno) + ": duplicate value '" + value + "'");
        s.emplace(std::move(value), p);
    }
    return Dist<std::string>::from_entries(std::move(s));
}

template <typename T, typename ToString>
void write_dist(std::ostream& out, const Dist<T>& d, ToString&& to_string) {
    for (const auto& [v, p] : d.support()) {
        out << to_string(v) << '\t';
        if (p.is_exact())
            out << p.rat().str();
        else
            out << format_double(p.value());
        out << '\n';
    }
}

} // namespace gfuzz
