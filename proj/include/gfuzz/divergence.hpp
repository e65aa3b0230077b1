// Divergences on finite distributions, the R(d) relation checks, and the
// randomized composability harness.
//
// KL and XD are directional as defined; in_relation applies the two-sided
// condition of R(d).  The skew divergence has a linear-time closed form (the
// optimal event is the set of outcomes with positive integrand) plus an
// exponential subset-enumeration reference used to validate it.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gfuzz/dist.hpp"
#include "gfuzz/numerics.hpp"
#include "gfuzz/rng.hpp"

namespace gfuzz {

// Measurement-level divergence selector; AD carries its skew parameter.
struct DivergenceId {
    enum class Kind { MD, SD, AD, KL, XD, HD };
    Kind kind;
    double eps = 0.0;

    std::string str() const {
        switch (kind) {
            case Kind::MD: return "MD";
            case Kind::SD: return "SD";
            case Kind::AD: return "AD(" + format_double(eps) + ")";
            case Kind::KL: return "KL";
            case Kind::XD: return "XD";
            case Kind::HD: return "HD";
        }
        return "?";
    }
};

namespace detail {

// Iterate f(mu_x, nu_x) over the union of supports.
template <typename T, typename F>
void for_union(const Dist<T>& mu, const Dist<T>& nu, F&& f) {
    auto a = mu.support().begin();
    auto b = nu.support().begin();
    while (a != mu.support().end() || b != nu.support().end()) {
        if (b == nu.support().end() || (a != mu.support().end() && a->first < b->first)) {
            f(a->second.value(), 0.0);
            ++a;
        } else if (a == mu.support().end() || b->first < a->first) {
            f(0.0, b->second.value());
            ++b;
        } else {
            f(a->second.value(), b->second.value());
            ++a;
            ++b;
        }
    }
}

template <typename T>
double max_div_oneway(const Dist<T>& mu, const Dist<T>& nu) {
    double worst = 0.0;
    for_union(mu, nu, [&](double m, double n) {
        if (m <= 0.0) return;
        if (n <= 0.0) {
            worst = INFINITY;
            return;
        }
        worst = std::max(worst, std::log(m / n));
    });
    return worst;
}

} // namespace detail

// Max divergence: worst-case log probability ratio, symmetrized.
template <typename T>
double max_div(const Dist<T>& mu, const Dist<T>& nu) {
    return std::max(detail::max_div_oneway(mu, nu), detail::max_div_oneway(nu, mu));
}

// Statistical distance: half L1.
template <typename T>
double stat_dist(const Dist<T>& mu, const Dist<T>& nu) {
    double sum = 0.0;
    detail::for_union(mu, nu, [&](double m, double n) { sum += std::abs(m - n); });
    return 0.5 * sum;
}

template <typename T>
double skew_div_oneway(double eps, const Dist<T>& mu, const Dist<T>& nu) {
    double scale = std::exp(eps);
    double sum = 0.0;
    detail::for_union(mu, nu, [&](double m, double n) { sum += std::max(m - scale * n, 0.0); });
    return sum;
}

// Skew divergence AD_eps: sup_S max(mu(S) - e^eps nu(S), nu(S) - e^eps mu(S)),
// never negative (the empty event gives 0).
template <typename T>
double skew_div(double eps, const Dist<T>& mu, const Dist<T>& nu) {
    if (!(eps >= 0)) throw Error("divergence-domain", "skew_div needs eps >= 0");
    return std::max({skew_div_oneway(eps, mu, nu), skew_div_oneway(eps, nu, mu), 0.0});
}

// Exponential reference for skew_div: enumerate every event S.
template <typename T>
double skew_div_subsets(double eps, const Dist<T>& mu, const Dist<T>& nu) {
    std::vector<std::pair<double, double>> pts;
    detail::for_union(mu, nu, [&](double m, double n) { pts.emplace_back(m, n); });
    if (pts.size() > 20) throw Error("divergence-domain", "subset oracle limited to 20 outcomes");
    double scale = std::exp(eps);
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (1ULL << pts.size()); ++mask) {
        double ms = 0.0, ns = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (mask & (1ULL << i)) {
                ms += pts[i].first;
                ns += pts[i].second;
            }
        best = std::max({best, ms - scale * ns, ns - scale * ms});
    }
    return best;
}

// KL divergence (directional); terms with mu(i) > nu(i) = 0 are infinite.
template <typename T>
double kl_div(const Dist<T>& mu, const Dist<T>& nu) {
    double sum = 0.0;
    detail::for_union(mu, nu, [&](double m, double n) {
        if (m <= 0.0) return; // 0 log(0/q) = 0, including q = 0
        if (n <= 0.0) {
            sum = INFINITY;
            return;
        }
        if (sum != INFINITY) sum += m * std::log(m / n);
    });
    return sum;
}

// chi-squared divergence (directional), same zero conventions as KL.
template <typename T>
double chi2_div(const Dist<T>& mu, const Dist<T>& nu) {
    double sum = 0.0;
    detail::for_union(mu, nu, [&](double m, double n) {
        if (m == 0.0 && n == 0.0) return;
        if (n <= 0.0) {
            sum = INFINITY;
            return;
        }
        if (sum != INFINITY) sum += (m - n) * (m - n) / n;
    });
    return sum;
}

// Hellinger distance; a proper metric bounded by 1.
template <typename T>
double hellinger(const Dist<T>& mu, const Dist<T>& nu) {
    double sum = 0.0;
    detail::for_union(mu, nu, [&](double m, double n) {
        double d = std::sqrt(m) - std::sqrt(n);
        sum += d * d;
    });
    return std::sqrt(0.5 * sum);
}

template <typename T>
double divergence(const DivergenceId& id, const Dist<T>& mu, const Dist<T>& nu) {
    switch (id.kind) {
        case DivergenceId::Kind::MD: return max_div(mu, nu);
        case DivergenceId::Kind::SD: return stat_dist(mu, nu);
        case DivergenceId::Kind::AD: return skew_div(id.eps, mu, nu);
        case DivergenceId::Kind::KL: return kl_div(mu, nu);
        case DivergenceId::Kind::XD: return chi2_div(mu, nu);
        case DivergenceId::Kind::HD: return hellinger(mu, nu);
    }
    throw Error("divergence-domain", "unreachable");
}

// Membership in R(d)(grade): both directional divergences within the bound.
// ED uses the indistinguishability relation (skew divergence at eps bounded
// by delta); the UNIT-graded families MD and SD relate equal distributions.
template <typename T>
bool in_relation(DivFamily d, const Grade& grade, const Dist<T>& mu, const Dist<T>& nu) {
    if (monoid_of(d) != grade.monoid())
        throw MonoidMismatch(std::string("in_relation: ") + family_name(d) + " vs grade " +
                             grade.str());
    switch (d) {
        case DivFamily::MD: return max_div(mu, nu) <= 0.0;
        case DivFamily::SD: return stat_dist(mu, nu) <= 0.0;
        case DivFamily::ED: return skew_div(grade.eps(), mu, nu) <= grade.delta();
        case DivFamily::KL: return kl_div(mu, nu) <= grade.alpha() && kl_div(nu, mu) <= grade.alpha();
        case DivFamily::XD:
            return chi2_div(mu, nu) <= grade.alpha() && chi2_div(nu, mu) <= grade.alpha();
        case DivFamily::HD: return hellinger(mu, nu) <= grade.alpha();
    }
    return false;
}

// ---- Composability harness --------------------------------------------------

struct CompReport {
    DivFamily family = DivFamily::SD;
    int trials = 0;
    int violations = 0;       // trials with violation above tolerance
    double max_violation = 0; // max over trials of lhs - rhs (clamped at 0)
    double tolerance = 1e-9;

    bool pass() const { return violations == 0; }
};

namespace detail {

inline Dist<int> random_dist(SplitMix64& rng, int n, bool allow_zeros) {
    std::vector<double> w(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& x : w) {
        x = allow_zeros && rng.unit() < 0.25 ? 0.0 : 0.05 + rng.unit();
        sum += x;
    }
    if (sum == 0.0) {
        w[rng.below(static_cast<std::uint64_t>(n))] = 1.0;
        sum = 1.0;
    }
    typename Dist<int>::Support s;
    for (int i = 0; i < n; ++i)
        if (w[static_cast<std::size_t>(i)] > 0.0)
            s.emplace(i, Prob::approx(w[static_cast<std::size_t>(i)] / sum));
    return Dist<int>::from_entries(std::move(s));
}

} // namespace detail

// One trial of d_Y(f# mu, g# nu) <= d_X(mu, nu) . sup_x d_Y(f(x), g(x)) for the
// family's monoid; for ED the composed pair (eps1 + eps2, delta1 + delta2)
// bounds the skew divergence of the composites.  Returns lhs - rhs.
inline double composability_gap(DivFamily d, SplitMix64& rng) {
    // KL, XD and MD need full-support inputs to keep the right side finite.
    bool allow_zeros = d == DivFamily::SD || d == DivFamily::HD || d == DivFamily::ED;
    int nx = 1 + static_cast<int>(rng.below(6));
    int ny = 1 + static_cast<int>(rng.below(6));
    Dist<int> mu = detail::random_dist(rng, nx, allow_zeros);
    Dist<int> nu = detail::random_dist(rng, nx, allow_zeros);
    std::vector<Dist<int>> f, g;
    for (int i = 0; i < nx; ++i) {
        f.push_back(detail::random_dist(rng, ny, allow_zeros));
        g.push_back(detail::random_dist(rng, ny, allow_zeros));
    }
    auto fk = [&](int x) { return f[static_cast<std::size_t>(x)]; };
    auto gk = [&](int x) { return g[static_cast<std::size_t>(x)]; };
    Dist<int> lifted_f = kleisli_bind<int, int>(mu, fk);
    Dist<int> lifted_g = kleisli_bind<int, int>(nu, gk);

    auto sup_over_kernels = [&](auto&& dv) {
        double worst = 0.0;
        for (int i = 0; i < nx; ++i)
            worst = std::max(worst,
                             dv(f[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(i)]));
        return worst;
    };

    double lhs = 0.0, rhs = 0.0;
    switch (d) {
        case DivFamily::MD: {
            lhs = max_div(lifted_f, lifted_g);
            rhs = max_div(mu, nu) +
                  sup_over_kernels([](const Dist<int>& a, const Dist<int>& b) { return max_div(a, b); });
            break;
        }
        case DivFamily::SD: {
            lhs = stat_dist(lifted_f, lifted_g);
            rhs = stat_dist(mu, nu) +
                  sup_over_kernels([](const Dist<int>& a, const Dist<int>& b) { return stat_dist(a, b); });
            break;
        }
        case DivFamily::KL: {
            lhs = kl_div(lifted_f, lifted_g);
            rhs = kl_div(mu, nu) +
                  sup_over_kernels([](const Dist<int>& a, const Dist<int>& b) { return kl_div(a, b); });
            break;
        }
        case DivFamily::XD: {
            double a = chi2_div(mu, nu);
            double b = sup_over_kernels(
                [](const Dist<int>& x, const Dist<int>& y) { return chi2_div(x, y); });
            lhs = chi2_div(lifted_f, lifted_g);
            rhs = a + b + a * b;
            break;
        }
        case DivFamily::HD: {
            double a = hellinger(mu, nu);
            double b = sup_over_kernels(
                [](const Dist<int>& x, const Dist<int>& y) { return hellinger(x, y); });
            lhs = hellinger(lifted_f, lifted_g);
            rhs = std::sqrt(a * a + b * b);
            break;
        }
        case DivFamily::ED: {
            double e1 = 1.5 * rng.unit();
            double e2 = 1.5 * rng.unit();
            lhs = skew_div(e1 + e2, lifted_f, lifted_g);
            rhs = skew_div(e1, mu, nu) +
                  sup_over_kernels([&](const Dist<int>& a, const Dist<int>& b) {
                      return skew_div(e2, a, b);
                  });
            break;
        }
    }
    if (rhs == INFINITY) return -INFINITY;
    if (lhs == INFINITY) return INFINITY;
    return lhs - rhs;
}

inline CompReport check_composability(DivFamily d, int trials, std::uint64_t seed,
                                      double tolerance = 1e-9) {
    if (trials < 1) throw Error("divergence-domain", "check_composability needs trials >= 1");
    CompReport report;
    report.family = d;
    report.trials = trials;
    report.tolerance = tolerance;
    for (int t = 0; t < trials; ++t) {
        SplitMix64 rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        double gap = composability_gap(d, rng);
        if (gap > report.max_violation) report.max_violation = gap;
        if (gap > tolerance) ++report.violations;
    }
    if (report.max_violation < 0.0) report.max_violation = 0.0;
    return report;
}

} // namespace gfuzz
