// Finite reflexive-symmetric relations, finite metric spaces, the basic
// metric constructions, and the path functor P with its right adjoint Q
// ("at most one").  check_lemmas exercises the adjunction and preservation
// properties on small carriers by exhaustive function enumeration.

#pragma once

#include <cstdint>
#include <deque>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gfuzz/numerics.hpp"
#include "gfuzz/rng.hpp"

namespace gfuzz {

// Reflexive symmetric relation over a finite ordered carrier.  Edges are
// stored as unordered index pairs; every (i, i) is present.
struct FinRel {
    std::vector<std::string> elems;
    std::set<std::pair<std::size_t, std::size_t>> edges; // normalized i <= j

    static FinRel diagonal(std::vector<std::string> carrier) {
        FinRel r;
        r.elems = std::move(carrier);
        for (std::size_t i = 0; i < r.elems.size(); ++i) r.edges.emplace(i, i);
        return r;
    }

    std::size_t size() const { return elems.size(); }

    void add_edge(std::size_t i, std::size_t j) {
        if (i >= size() || j >= size()) throw Error("rel-domain", "edge out of range");
        edges.emplace(std::min(i, j), std::max(i, j));
    }
    bool related(std::size_t i, std::size_t j) const {
        return edges.count({std::min(i, j), std::max(i, j)}) > 0;
    }

    bool operator==(const FinRel& o) const { return elems == o.elems && edges == o.edges; }
};

// Finite extended pseudo-metric space.  Matrices supplied from outside are
// validated eagerly (zero diagonal, symmetry, triangle inequality); the
// functorial constructions below preserve these laws and skip the cubic
// check.
struct FinMet {
    std::vector<std::string> elems;
    std::vector<std::vector<ExtReal>> dist;

    FinMet() = default;
    FinMet(std::vector<std::string> carrier, std::vector<std::vector<ExtReal>> d,
           bool check = true)
        : elems(std::move(carrier)), dist(std::move(d)) {
        if (check) validate();
    }

    std::size_t size() const { return elems.size(); }
    const ExtReal& d(std::size_t i, std::size_t j) const { return dist[i][j]; }

    bool operator==(const FinMet& o) const { return elems == o.elems && dist == o.dist; }

    void validate() const {
        std::size_t n = size();
        if (dist.size() != n) throw Error("met-invalid", "matrix size mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (dist[i].size() != n) throw Error("met-invalid", "matrix row size mismatch");
            if (!dist[i][i].is_zero()) throw Error("met-invalid", "nonzero diagonal");
            for (std::size_t j = 0; j < n; ++j)
                if (dist[i][j] != dist[j][i]) throw Error("met-invalid", "asymmetric matrix");
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    if (ext_add(dist[i][j], dist[j][k]) < dist[i][k])
                        throw Error("met-invalid", "triangle inequality violated");
    }
};

// Path metric P: shortest hop count in the relation graph, infinite when
// disconnected.  Always a valid metric.
inline FinMet path_metric(const FinRel& r) {
    std::size_t n = r.size();
    std::vector<std::vector<ExtReal>> d(n, std::vector<ExtReal>(n, ExtReal::infinity()));
    for (std::size_t src = 0; src < n; ++src) {
        std::vector<std::int64_t> hops(n, -1);
        std::deque<std::size_t> queue{src};
        hops[src] = 0;
        while (!queue.empty()) {
            std::size_t cur = queue.front();
            queue.pop_front();
            for (std::size_t next = 0; next < n; ++next) {
                if (hops[next] >= 0 || !r.related(cur, next)) continue;
                hops[next] = hops[cur] + 1;
                queue.push_back(next);
            }
        }
        for (std::size_t j = 0; j < n; ++j)
            if (hops[j] >= 0) d[src][j] = ExtReal(Rational(hops[j]));
    }
    return FinMet(r.elems, std::move(d), false);
}

// At-most-one Q: relate elements at distance <= 1.
inline FinRel at_most_one(const FinMet& m) {
    FinRel r = FinRel::diagonal(m.elems);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            if (m.d(i, j) <= ExtReal(1)) r.add_edge(i, j);
    return r;
}

// ---- Constructions from the metric-space table ------------------------------

// r . X; scaling by infinity forgets the metric entirely (0 on the diagonal
// of values, infinite between distinct points).
inline FinMet met_scale(const ExtReal& r, const FinMet& x) {
    std::size_t n = x.size();
    std::vector<std::vector<ExtReal>> d(n, std::vector<ExtReal>(n, ExtReal(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (r.is_infinite())
                d[i][j] = i == j ? ExtReal(0) : ExtReal::infinity();
            else
                d[i][j] = ext_mul(r, x.d(i, j));
        }
    return FinMet(x.elems, std::move(d), false);
}

inline FinMet met_discrete(std::vector<std::string> carrier) {
    std::size_t n = carrier.size();
    std::vector<std::vector<ExtReal>> d(n, std::vector<ExtReal>(n, ExtReal::infinity()));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = ExtReal(0);
    return FinMet(std::move(carrier), std::move(d), false);
}

namespace detail {

inline std::string pair_label(const std::string& a, const std::string& b) {
    return "(" + a + "," + b + ")";
}

template <typename Combine>
FinMet met_product_with(const FinMet& x, const FinMet& y, Combine&& combine) {
    std::vector<std::string> carrier;
    for (const auto& a : x.elems)
        for (const auto& b : y.elems) carrier.push_back(pair_label(a, b));
    std::size_t n = carrier.size();
    std::vector<std::vector<ExtReal>> d(n, std::vector<ExtReal>(n, ExtReal(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t xi = i / y.size(), yi = i % y.size();
            std::size_t xj = j / y.size(), yj = j % y.size();
            d[i][j] = combine(x.d(xi, xj), y.d(yi, yj));
        }
    return FinMet(std::move(carrier), std::move(d), false);
}

} // namespace detail

// X (x) Y: sum of coordinate distances.
inline FinMet met_tensor(const FinMet& x, const FinMet& y) {
    return detail::met_product_with(x, y, [](const ExtReal& a, const ExtReal& b) {
        return ext_add(a, b);
    });
}

// X & Y (the cartesian product): max of coordinate distances.
inline FinMet met_with(const FinMet& x, const FinMet& y) {
    return detail::met_product_with(x, y, [](const ExtReal& a, const ExtReal& b) {
        return ext_max(a, b);
    });
}

// X + Y: the two sides are infinitely apart.
inline FinMet met_sum(const FinMet& x, const FinMet& y) {
    std::vector<std::string> carrier;
    for (const auto& a : x.elems) carrier.push_back("inl " + a);
    for (const auto& b : y.elems) carrier.push_back("inr " + b);
    std::size_t n = carrier.size();
    std::vector<std::vector<ExtReal>> d(n, std::vector<ExtReal>(n, ExtReal::infinity()));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) d[i][j] = x.d(i, j);
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) d[x.size() + i][x.size() + j] = y.d(i, j);
    return FinMet(std::move(carrier), std::move(d), false);
}

// All functions |X| -> |Y| as index vectors.
inline std::vector<std::vector<std::size_t>> all_functions(std::size_t dom, std::size_t cod) {
    std::vector<std::vector<std::size_t>> fns;
    if (cod == 0) return fns;
    std::vector<std::size_t> f(dom, 0);
    while (true) {
        fns.push_back(f);
        std::size_t i = 0;
        for (; i < dom; ++i) {
            if (++f[i] < cod) break;
            f[i] = 0;
        }
        if (i == dom) break;
    }
    return fns;
}

inline bool non_expansive(const std::vector<std::size_t>& f, const FinMet& x, const FinMet& y) {
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            if (!(y.d(f[i], f[j]) <= x.d(i, j))) return false;
    return true;
}

inline bool relation_preserving(const std::vector<std::size_t>& f, const FinRel& x,
                                const FinRel& y) {
    for (const auto& [i, j] : x.edges)
        if (!y.related(f[i], f[j])) return false;
    return true;
}

// X -o Y: non-expansive maps under the sup metric.  Enumerates the full
// function space, so carriers are capped.
inline FinMet met_lolli(const FinMet& x, const FinMet& y, std::size_t carrier_cap = 5) {
    if (x.size() > carrier_cap || y.size() > carrier_cap)
        throw Error("carrier-too-large", "lolli carrier exceeds enumeration cap");
    std::vector<std::vector<std::size_t>> maps;
    for (const auto& f : all_functions(x.size(), y.size()))
        if (non_expansive(f, x, y)) maps.push_back(f);
    if (maps.size() > 2000)
        throw Error("carrier-too-large", "lolli function space exceeds enumeration cap");
    std::vector<std::string> carrier;
    for (const auto& f : maps) {
        std::string label = "[";
        for (std::size_t i = 0; i < f.size(); ++i)
            label += (i ? "," : "") + y.elems[f[i]];
        carrier.push_back(label + "]");
    }
    std::size_t n = maps.size();
    std::vector<std::vector<ExtReal>> d(n, std::vector<ExtReal>(n, ExtReal(0)));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            ExtReal sup(0);
            for (std::size_t i = 0; i < x.size(); ++i)
                sup = ext_max(sup, y.d(maps[a][i], maps[b][i]));
            d[a][b] = sup;
        }
    return FinMet(std::move(carrier), std::move(d), false);
}

// Relation product: both coordinates related.
inline FinRel rel_product(const FinRel& x, const FinRel& y) {
    std::vector<std::string> carrier;
    for (const auto& a : x.elems)
        for (const auto& b : y.elems) carrier.push_back(detail::pair_label(a, b));
    FinRel r;
    r.elems = std::move(carrier);
    std::size_t ny = y.size();
    for (std::size_t i = 0; i < r.elems.size(); ++i)
        for (std::size_t j = i; j < r.elems.size(); ++j)
            if (x.related(i / ny, j / ny) && y.related(i % ny, j % ny)) r.add_edge(i, j);
    return r;
}

// Relation tensor (the footnote structure): steps change one coordinate.
inline FinRel rel_tensor(const FinRel& x, const FinRel& y) {
    std::vector<std::string> carrier;
    for (const auto& a : x.elems)
        for (const auto& b : y.elems) carrier.push_back(detail::pair_label(a, b));
    FinRel r;
    r.elems = std::move(carrier);
    std::size_t ny = y.size();
    for (std::size_t i = 0; i < r.elems.size(); ++i)
        for (std::size_t j = i; j < r.elems.size(); ++j) {
            bool same_x = i / ny == j / ny, same_y = i % ny == j % ny;
            if ((same_x && y.related(i % ny, j % ny)) || (same_y && x.related(i / ny, j / ny)))
                r.add_edge(i, j);
        }
    return r;
}

// ---- Lemma suite -------------------------------------------------------------

struct LemmaCheck {
    std::string name;
    int cases = 0;
    int failures = 0;
};

struct LemmasReport {
    std::vector<LemmaCheck> checks;
    bool pass() const {
        for (const auto& c : checks)
            if (c.failures > 0) return false;
        return true;
    }
};

namespace detail {

inline std::vector<std::string> index_carrier(std::size_t n) {
    std::vector<std::string> elems;
    for (std::size_t i = 0; i < n; ++i) elems.push_back("x" + std::to_string(i));
    return elems;
}

inline FinRel random_rel(SplitMix64& rng, std::size_t max_size, double edge_prob = 0.35) {
    std::size_t n = 1 + rng.below(max_size);
    FinRel r = FinRel::diagonal(index_carrier(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.unit() < edge_prob) r.add_edge(i, j);
    return r;
}

// Random small metric space: a path metric scaled by 1/2, 1 or 2.
inline FinMet random_met(SplitMix64& rng, std::size_t max_size) {
    FinRel base = random_rel(rng, max_size);
    static const Rational scales[3] = {Rational(1, 2), Rational(1), Rational(2)};
    return met_scale(ExtReal(scales[rng.below(3)]), path_metric(base));
}

} // namespace detail

// Exhaustive checks of the path-adjunction properties on sampled inputs.
inline LemmasReport check_lemmas(int sample_size, std::uint64_t seed) {
    LemmasReport report;

    LemmaCheck qp{"QP = id on relations", 0, 0};
    for (int t = 0; t < sample_size; ++t) {
        SplitMix64 rng = trial_rng(seed, 0x100 + static_cast<std::uint64_t>(t));
        FinRel r = detail::random_rel(rng, 8);
        ++qp.cases;
        if (!(at_most_one(path_metric(r)) == r)) ++qp.failures;
    }
    report.checks.push_back(qp);

    LemmaCheck adj{"hom-set equality Met(PX,Y) = RSRel(X,QY)", 0, 0};
    for (int t = 0; t < sample_size; ++t) {
        SplitMix64 rng = trial_rng(seed, 0x200 + static_cast<std::uint64_t>(t));
        FinRel x = detail::random_rel(rng, 4);
        FinMet y = detail::random_met(rng, 4);
        FinMet px = path_metric(x);
        FinRel qy = at_most_one(y);
        ++adj.cases;
        for (const auto& f : all_functions(x.size(), y.size()))
            if (non_expansive(f, px, y) != relation_preserving(f, x, qy)) {
                ++adj.failures;
                break;
            }
    }
    report.checks.push_back(adj);

    LemmaCheck faithful{"P fully faithful", 0, 0};
    for (int t = 0; t < sample_size; ++t) {
        SplitMix64 rng = trial_rng(seed, 0x300 + static_cast<std::uint64_t>(t));
        FinRel x = detail::random_rel(rng, 4);
        FinRel y = detail::random_rel(rng, 4);
        FinMet px = path_metric(x), py = path_metric(y);
        ++faithful.cases;
        for (const auto& f : all_functions(x.size(), y.size()))
            if (relation_preserving(f, x, y) != non_expansive(f, px, py)) {
                ++faithful.failures;
                break;
            }
    }
    report.checks.push_back(faithful);

    LemmaCheck prod{"P(X x Y) = PX x PY", 0, 0};
    LemmaCheck tens{"P(X (x) Y) = PX (x) PY", 0, 0};
    for (int t = 0; t < sample_size; ++t) {
        SplitMix64 rng = trial_rng(seed, 0x400 + static_cast<std::uint64_t>(t));
        FinRel x = detail::random_rel(rng, 5);
        FinRel y = detail::random_rel(rng, 5);
        ++prod.cases;
        if (!(path_metric(rel_product(x, y)) == met_with(path_metric(x), path_metric(y))))
            ++prod.failures;
        ++tens.cases;
        if (!(path_metric(rel_tensor(x, y)) == met_tensor(path_metric(x), path_metric(y))))
            ++tens.failures;
    }
    report.checks.push_back(prod);
    report.checks.push_back(tens);

    LemmaCheck disc{"P and Q preserve discrete spaces", 0, 0};
    for (std::size_t n = 1; n <= 6; ++n) {
        auto carrier = detail::index_carrier(n);
        ++disc.cases;
        bool ok = path_metric(FinRel::diagonal(carrier)) == met_discrete(carrier) &&
                  at_most_one(met_discrete(carrier)) == FinRel::diagonal(carrier);
        if (!ok) ++disc.failures;
    }
    report.checks.push_back(disc);

    return report;
}

} // namespace gfuzz
