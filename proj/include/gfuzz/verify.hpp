// Privacy-bound certification harness: enumerate database pairs at a given
// adjacency distance, run the program on both sides, and compare the measured
// divergence against the bound promised by the inferred type.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gfuzz/divergence.hpp"
#include "gfuzz/interp.hpp"

namespace gfuzz {

struct DbUniverse {
    std::vector<Record> records;
    std::size_t max_db_size = 1;
    std::map<std::string, Predicate> predicates;

    static DbUniverse from_json(const nlohmann::json& j);
    static DbUniverse load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("io", "cannot open universe file " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

namespace detail {

inline Scalar scalar_from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw Error("universe-file", "record fields must be scalars");
}

inline Record record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("universe-file", "records must be JSON objects");
    Record r;
    for (auto it = j.begin(); it != j.end(); ++it) r.fields[it.key()] = scalar_from_json(it.value());
    return r;
}

} // namespace detail

inline DbUniverse DbUniverse::from_json(const nlohmann::json& j) {
    DbUniverse u;
    const nlohmann::json* records = nullptr;
    if (j.is_array()) {
        records = &j;
    } else {
        if (!j.contains("records")) throw Error("universe-file", "missing 'records'");
        records = &j.at("records");
        if (j.contains("max_db_size")) u.max_db_size = j.at("max_db_size").get<std::size_t>();
        if (j.contains("predicates"))
            for (auto it = j.at("predicates").begin(); it != j.at("predicates").end(); ++it) {
                const auto& p = it.value();
                u.predicates[it.key()] = Predicate{p.at("field").get<std::string>(),
                                                   p.at("op").get<std::string>(),
                                                   detail::scalar_from_json(p.at("value"))};
            }
    }
    for (const auto& rec : *records) u.records.push_back(detail::record_from_json(rec));
    for (std::size_t i = 0; i < u.records.size(); ++i)
        for (std::size_t k = i + 1; k < u.records.size(); ++k)
            if (u.records[i] == u.records[k])
                throw Error("universe-file", "universe records must be distinct");
    if (u.max_db_size < 1) throw Error("universe-file", "max_db_size must be >= 1");
    return u;
}

inline Database database_from_json(const nlohmann::json& j) {
    const nlohmann::json& records = j.is_array() ? j : j.at("records");
    std::vector<Record> rows;
    for (const auto& rec : records) rows.push_back(detail::record_from_json(rec));
    return Database::of(std::move(rows));
}

// All multisets over the universe records with size <= max_db_size.
inline std::vector<Database> enumerate_databases(const DbUniverse& u, std::size_t cap = 200000) {
    std::vector<Database> out;
    std::vector<std::size_t> counts(u.records.size(), 0);
    while (true) {
        std::size_t total = 0;
        for (auto c : counts) total += c;
        if (total <= u.max_db_size) {
            std::vector<Record> rows;
            for (std::size_t i = 0; i < counts.size(); ++i)
                for (std::size_t c = 0; c < counts[i]; ++c) rows.push_back(u.records[i]);
            out.push_back(Database::of(std::move(rows)));
            if (out.size() > cap) throw Error("enumeration-too-large", "database cap exceeded");
        }
        std::size_t i = 0;
        for (; i < counts.size(); ++i) {
            if (++counts[i] <= u.max_db_size) break;
            counts[i] = 0;
        }
        if (i == counts.size()) break;
    }
    return out;
}

// Unordered pairs of databases at symmetric difference exactly k.
inline std::vector<std::pair<Database, Database>> enumerate_adjacent(const DbUniverse& u, int k,
                                                                     std::size_t cap = 200000) {
    if (k < 1) throw Error("verify-domain", "adjacency distance must be >= 1");
    std::vector<Database> dbs = enumerate_databases(u, cap);
    std::vector<std::pair<Database, Database>> pairs;
    for (std::size_t i = 0; i < dbs.size(); ++i)
        for (std::size_t j = i + 1; j < dbs.size(); ++j)
            if (db_distance(dbs[i], dbs[j]) == static_cast<std::size_t>(k)) {
                pairs.emplace_back(dbs[i], dbs[j]);
                if (pairs.size() > cap) throw Error("enumeration-too-large", "pair cap exceeded");
            }
    return pairs;
}

// Group-privacy parameters for inputs k apart: iterate the intermediate-point
// composition (eps_{i+1}, delta_{i+1}) = (eps_i + eps, delta + e^eps delta_i).
inline Grade group_privacy_unfold(int k, double eps, double delta) {
    if (k < 1) throw Error("verify-domain", "group size must be >= 1");
    double e = eps, d = delta;
    for (int i = 1; i < k; ++i) {
        e += eps;
        d = delta + std::exp(eps) * d;
    }
    return Grade::ed(e, d);
}

struct PairMeasurement {
    std::string left, right;
    double measured = 0.0;
};

struct VerifyReport {
    std::string program;
    std::string type_string;
    DivFamily family = DivFamily::ED;
    int k = 1;
    std::string bound_desc;
    double bound = 0.0;
    double check_eps = 0.0; // for ED: the eps the skew divergence is taken at
    std::size_t pair_count = 0;
    double max_measured = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
    std::string grid;
    double runtime_ms = 0.0;
    std::vector<PairMeasurement> pairs;
};

namespace detail {

template <typename Fn>
void run_parallel(int jobs, std::size_t n, Fn&& fn) {
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::size_t stride = static_cast<std::size_t>(jobs);
    for (std::size_t w = 0; w < stride; ++w)
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += stride) fn(i);
        });
    for (auto& t : workers) t.join();
}

struct VerifiableShape {
    DivFamily family;
    Grade grade = Grade::unit_of(MonoidId::Unit);
    ExtReal bang_scale = ExtReal(1);
    bool banged = false;
};

inline VerifiableShape verifiable_shape(const TypePtr& t) {
    auto fail = [&](const std::string& msg) -> VerifiableShape {
        throw Error("type-shape-mismatch",
                    msg + " (program type is " + type_str(t) + ")");
    };
    if (t->kind != TypeKind::Lolli) return fail("expected a function from Db");
    VerifiableShape s;
    TypePtr dom = t->left;
    if (dom->kind == TypeKind::Bang) {
        s.banged = true;
        s.bang_scale = dom->scale;
        dom = dom->left;
    }
    if (dom->kind != TypeKind::Db) return fail("expected a Db domain");
    if (t->right->kind != TypeKind::Monad) return fail("expected a monadic result");
    s.family = t->right->family;
    s.grade = t->right->grade;
    return s;
}

} // namespace detail

// Check the divergence bound promised by `judgment` over every pair of
// databases at distance k.  k must match the bang annotation on the domain
// (1 when plain).
inline VerifyReport verify_bound(const std::string& program_name, const TermPtr& program,
                                 const Judgment& judgment, const DbUniverse& u,
                                 std::optional<int> k_request, EvalConfig cfg,
                                 double tolerance = 1e-9, int jobs = 1) {
    auto start = std::chrono::steady_clock::now();
    detail::VerifiableShape shape = detail::verifiable_shape(judgment.type);

    int k = 1;
    if (shape.banged) {
        const ExtReal& s = shape.bang_scale;
        if (s.is_infinite() || !s.finite_value().is_integer())
            throw Error("type-shape-mismatch",
                        "verification needs an integral bang annotation, got " + s.str());
        k = static_cast<int>(s.finite_value().num());
    }
    if (k_request && *k_request != k)
        throw Error("type-shape-mismatch",
                    "requested k=" + std::to_string(*k_request) + " but the program type fixes k=" +
                        std::to_string(k));

    VerifyReport report;
    report.program = program_name;
    report.type_string = type_str(judgment.type);
    report.family = shape.family;
    report.k = k;
    report.tolerance = tolerance;

    for (const auto& [pname, pred] : u.predicates) cfg.predicates.emplace(pname, pred);

    double scale = shape.banged ? shape.bang_scale.to_double() : 1.0;
    DivergenceId measure{DivergenceId::Kind::SD, 0.0};
    bool two_sided = false;
    bool squared = false;
    switch (shape.family) {
        case DivFamily::ED: {
            Grade unfolded = group_privacy_unfold(k, shape.grade.eps(), shape.grade.delta());
            measure = {DivergenceId::Kind::AD, unfolded.eps()};
            report.check_eps = unfolded.eps();
            report.bound = unfolded.delta();
            report.bound_desc = "skew_div(" + format_double(unfolded.eps()) +
                                ") <= " + format_double(unfolded.delta());
            break;
        }
        case DivFamily::MD:
            measure = {DivergenceId::Kind::MD, 0.0};
            report.bound = scale * k;
            report.bound_desc = "max_div <= " + format_double(report.bound);
            break;
        case DivFamily::SD:
            measure = {DivergenceId::Kind::SD, 0.0};
            report.bound = scale * k;
            report.bound_desc = "stat_dist <= " + format_double(report.bound);
            break;
        case DivFamily::KL:
        case DivFamily::XD:
        case DivFamily::HD: {
            if (k != 1)
                throw Error("type-shape-mismatch",
                            "group unfolding is only available for the ED family");
            measure = {shape.family == DivFamily::KL   ? DivergenceId::Kind::KL
                       : shape.family == DivFamily::XD ? DivergenceId::Kind::XD
                                                       : DivergenceId::Kind::HD,
                       0.0};
            two_sided = shape.family != DivFamily::HD;
            // HD grades are calibrated on the squared scale (the Poisson rule
            // bounds 1 - exp(-|sqrt a - sqrt a'|^2 / 2), a squared Hellinger
            // quantity), so the harness compares hellinger^2 against them.
            squared = shape.family == DivFamily::HD;
            report.bound = shape.grade.alpha();
            report.bound_desc = std::string(squared ? "hellinger^2" : family_name(shape.family)) +
                                (two_sided ? " (both directions) <= " : " <= ") +
                                format_double(report.bound);
            break;
        }
    }
    report.grid = cfg.grid ? cfg.grid->str() : "auto";

    auto pairs = enumerate_adjacent(u, k);
    report.pair_count = pairs.size();

    // Evaluate each distinct database once.
    std::map<Database, std::size_t> index;
    std::vector<Database> distinct;
    for (const auto& [a, b] : pairs)
        for (const auto& db : {a, b})
            if (index.emplace(db, distinct.size()).second) distinct.push_back(db);

    Value fn = eval({}, program, cfg);
    std::vector<Dist<Value>> outputs(distinct.size());
    detail::run_parallel(jobs, distinct.size(), [&](std::size_t i) {
        detail::Evaluator ev(cfg);
        Value dbv = Value::database(distinct[i]);
        if (shape.banged) dbv = Value::banged(std::move(dbv));
        Value out = ev.apply(*program, fn, std::move(dbv));
        if (out.kind != Value::Kind::Dist)
            throw Error("type-shape-mismatch", "program output is not a distribution");
        outputs[i] = *out.dist;
    });

    report.pairs.resize(pairs.size());
    detail::run_parallel(jobs, pairs.size(), [&](std::size_t i) {
        const auto& [a, b] = pairs[i];
        const Dist<Value>& da = outputs[index.at(a)];
        const Dist<Value>& db = outputs[index.at(b)];
        double m = divergence(measure, da, db);
        if (two_sided) m = std::max(m, divergence(measure, db, da));
        if (squared) m *= m;
        report.pairs[i] = PairMeasurement{a.str(), b.str(), m};
    });
    for (const auto& p : report.pairs) report.max_measured = std::max(report.max_measured, p.measured);

    report.pass = report.max_measured <= report.bound + tolerance;
    report.runtime_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    return report;
}

} // namespace gfuzz
