// Call-by-value evaluator.  Deterministic constructs evaluate standardly;
// return/bind build exact Dist values over the outcome universe, and the
// primitive mechanisms dispatch to the grid discretizations.  The evaluator
// trusts the typechecker: kind mismatches surface as runtime-type-error only
// on ill-typed input.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gfuzz/dist.hpp"
#include "gfuzz/lang.hpp"
#include "gfuzz/typecheck.hpp"

namespace gfuzz {

// ---- Databases ----------------------------------------------------------------

using Scalar = std::variant<bool, std::int64_t, double, std::string>;

inline std::string scalar_str(const Scalar& s) {
    if (std::holds_alternative<bool>(s)) return std::get<bool>(s) ? "true" : "false";
    if (std::holds_alternative<std::int64_t>(s)) return std::to_string(std::get<std::int64_t>(s));
    if (std::holds_alternative<double>(s)) return format_double(std::get<double>(s));
    return std::get<std::string>(s);
}

struct Record {
    std::map<std::string, Scalar> fields;

    bool operator<(const Record& o) const { return fields < o.fields; }
    bool operator==(const Record& o) const { return fields == o.fields; }

    std::string str() const {
        std::string out = "{";
        bool first = true;
        for (const auto& [k, v] : fields) {
            if (!first) out += ",";
            out += k + ":" + scalar_str(v);
            first = false;
        }
        return out + "}";
    }
};

// Finite multiset of records; rows are kept sorted.
struct Database {
    std::vector<Record> rows;

    static Database of(std::vector<Record> rows) {
        Database d;
        d.rows = std::move(rows);
        std::sort(d.rows.begin(), d.rows.end());
        return d;
    }
    std::size_t size() const { return rows.size(); }

    bool operator<(const Database& o) const { return rows < o.rows; }
    bool operator==(const Database& o) const { return rows == o.rows; }

    std::string str() const {
        std::string out = "[";
        for (std::size_t i = 0; i < rows.size(); ++i) out += (i ? " " : "") + rows[i].str();
        return out + "]";
    }
};

// Multiset symmetric difference (the Hamming adjacency distance).
inline std::size_t db_distance(const Database& a, const Database& b) {
    std::size_t i = 0, j = 0, diff = 0;
    while (i < a.rows.size() && j < b.rows.size()) {
        if (a.rows[i] == b.rows[j]) {
            ++i;
            ++j;
        } else if (a.rows[i] < b.rows[j]) {
            ++diff;
            ++i;
        } else {
            ++diff;
            ++j;
        }
    }
    return diff + (a.rows.size() - i) + (b.rows.size() - j);
}

// Row filter for count[p]; ops: ==, !=, <, <=, >, >=.
struct Predicate {
    std::string field;
    std::string op;
    Scalar value;

    bool matches(const Record& r) const {
        auto it = r.fields.find(field);
        if (it == r.fields.end()) return false;
        const Scalar& v = it->second;
        if (op == "==") return v == value;
        if (op == "!=") return !(v == value);
        if (v.index() != value.index()) return false;
        if (op == "<") return v < value;
        if (op == "<=") return !(value < v);
        if (op == ">") return value < v;
        if (op == ">=") return !(v < value);
        throw Error("predicate-invalid", "unknown predicate op '" + op + "'");
    }
};

struct EvalConfig {
    std::optional<Grid> grid;
    std::map<std::string, Predicate> predicates;

    // Default discretization window when no grid is configured: eight noise
    // scales around the mean, 1000 cells.
    Grid grid_for(double center, double spread) const {
        if (grid) return *grid;
        Grid g;
        g.lo = center - 8.0 * spread;
        g.hi = center + 8.0 * spread;
        g.step = (g.hi - g.lo) / 1000.0;
        return g;
    }
};

// ---- Values ---------------------------------------------------------------------

class Value;
struct ClosureData;
struct BuiltinData;
struct EnvData;

class Value {
public:
    enum class Kind { Unit, Bool, Nat, Real, Tensor, With, Tagged, Banged, Db, Dist, Closure, Builtin };

    Kind kind = Kind::Unit;
    bool boolean = false;
    std::uint64_t nat = 0;
    double real = 0.0;
    bool tag_left = true;
    std::shared_ptr<const Value> fst, snd; // tensor/with components; tagged/banged payload in fst
    std::shared_ptr<const Database> db;
    std::shared_ptr<const Dist<Value>> dist;
    std::shared_ptr<const ClosureData> closure;
    std::shared_ptr<const BuiltinData> builtin;

    static Value unit() { return Value{}; }
    static Value of_bool(bool b) {
        Value v;
        v.kind = Kind::Bool;
        v.boolean = b;
        return v;
    }
    static Value of_nat(std::uint64_t n) {
        Value v;
        v.kind = Kind::Nat;
        v.nat = n;
        return v;
    }
    static Value of_real(double r) {
        Value v;
        v.kind = Kind::Real;
        v.real = r;
        return v;
    }
    static Value tensor(Value a, Value b) {
        Value v;
        v.kind = Kind::Tensor;
        v.fst = std::make_shared<Value>(std::move(a));
        v.snd = std::make_shared<Value>(std::move(b));
        return v;
    }
    static Value with_pair(Value a, Value b) {
        Value v = tensor(std::move(a), std::move(b));
        v.kind = Kind::With;
        return v;
    }
    static Value tagged(bool left, Value payload) {
        Value v;
        v.kind = Kind::Tagged;
        v.tag_left = left;
        v.fst = std::make_shared<Value>(std::move(payload));
        return v;
    }
    static Value banged(Value payload) {
        Value v;
        v.kind = Kind::Banged;
        v.fst = std::make_shared<Value>(std::move(payload));
        return v;
    }
    static Value database(Database d) {
        Value v;
        v.kind = Kind::Db;
        v.db = std::make_shared<Database>(std::move(d));
        return v;
    }
    static Value distribution(Dist<Value> d) {
        Value v;
        v.kind = Kind::Dist;
        v.dist = std::make_shared<Dist<Value>>(std::move(d));
        return v;
    }
    static Value make_closure(std::shared_ptr<const ClosureData> c) {
        Value v;
        v.kind = Kind::Closure;
        v.closure = std::move(c);
        return v;
    }
    static Value make_builtin(std::shared_ptr<const BuiltinData> b) {
        Value v;
        v.kind = Kind::Builtin;
        v.builtin = std::move(b);
        return v;
    }

    bool operator<(const Value& o) const;
    bool operator==(const Value& o) const { return !(*this < o) && !(o < *this); }

    std::string str() const;
};

struct EnvData {
    std::map<std::string, Value> vars;
};

struct ClosureData {
    std::shared_ptr<const EnvData> env;
    std::string param;
    TermPtr body;
};

struct BuiltinData {
    std::string name;
    std::vector<StaticArg> args;
    std::vector<Value> applied;
};

namespace detail {

inline int dist_compare(const Dist<Value>& a, const Dist<Value>& b);

inline int value_compare(const Value& a, const Value& b) {
    auto rank = [](const Value& v) { return static_cast<int>(v.kind); };
    if (rank(a) != rank(b)) return rank(a) < rank(b) ? -1 : 1;
    auto cmp = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
    switch (a.kind) {
        case Value::Kind::Unit: return 0;
        case Value::Kind::Bool: return cmp(a.boolean, b.boolean);
        case Value::Kind::Nat: return cmp(a.nat, b.nat);
        case Value::Kind::Real: return cmp(a.real, b.real);
        case Value::Kind::Tensor:
        case Value::Kind::With: {
            int c = value_compare(*a.fst, *b.fst);
            return c != 0 ? c : value_compare(*a.snd, *b.snd);
        }
        case Value::Kind::Tagged: {
            if (a.tag_left != b.tag_left) return a.tag_left ? -1 : 1;
            return value_compare(*a.fst, *b.fst);
        }
        case Value::Kind::Banged: return value_compare(*a.fst, *b.fst);
        case Value::Kind::Db: return cmp(*a.db, *b.db);
        case Value::Kind::Dist: return dist_compare(*a.dist, *b.dist);
        case Value::Kind::Closure:
        case Value::Kind::Builtin:
            throw Error("value-order", "closures are not comparable outcome values");
    }
    return 0;
}

inline int dist_compare(const Dist<Value>& a, const Dist<Value>& b) {
    auto ia = a.support().begin();
    auto ib = b.support().begin();
    for (; ia != a.support().end() && ib != b.support().end(); ++ia, ++ib) {
        int c = value_compare(ia->first, ib->first);
        if (c != 0) return c;
        if (ia->second.value() != ib->second.value())
            return ia->second.value() < ib->second.value() ? -1 : 1;
    }
    if (ia != a.support().end()) return 1;
    if (ib != b.support().end()) return -1;
    return 0;
}

} // namespace detail

inline bool Value::operator<(const Value& o) const { return detail::value_compare(*this, o) < 0; }

inline std::string Value::str() const {
    switch (kind) {
        case Kind::Unit: return "()";
        case Kind::Bool: return boolean ? "T" : "F";
        case Kind::Nat: return std::to_string(nat);
        case Kind::Real: return format_double(real);
        case Kind::Tensor: return "(" + fst->str() + ", " + snd->str() + ")";
        case Kind::With: return "<" + fst->str() + ", " + snd->str() + ">";
        case Kind::Tagged: return (tag_left ? "inl " : "inr ") + fst->str();
        case Kind::Banged: return "!" + fst->str();
        case Kind::Db: return db->str();
        case Kind::Dist: {
            std::string out = "dist{";
            bool first = true;
            for (const auto& [v, p] : dist->support()) {
                if (!first) out += ", ";
                out += v.str() + ": " + format_double(p.value());
                first = false;
            }
            return out + "}";
        }
        case Kind::Closure: return "<closure>";
        case Kind::Builtin: return "<" + builtin->name + ">";
    }
    return "?";
}

// ---- Evaluator -------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void run_fail(const Term& at, const std::string& msg) {
    throw Diagnostic("runtime-type-error", at.line, at.col, msg);
}

inline std::size_t builtin_arity(const std::string& name) {
    return name == "AC" ? 3 : 1;
}

class Evaluator {
public:
    explicit Evaluator(const EvalConfig& cfg) : cfg_(cfg) {}

    Value eval(const std::shared_ptr<const EnvData>& env, const TermPtr& e) {
        switch (e->kind) {
            case TermKind::Var: {
                auto it = env->vars.find(e->name);
                if (it == env->vars.end()) run_fail(*e, "unbound variable " + e->name);
                return it->second;
            }
            case TermKind::RealConst: return Value::of_real(e->value);
            case TermKind::UnitVal: return Value::unit();
            case TermKind::Add: {
                Value l = eval(env, e->a), r = eval(env, e->b);
                expect(*e, l, Value::Kind::Real, "+ operand");
                expect(*e, r, Value::Kind::Real, "+ operand");
                return Value::of_real(l.real + r.real);
            }
            case TermKind::Lam:
                return Value::make_closure(
                    std::make_shared<ClosureData>(ClosureData{env, e->name, e->a}));
            case TermKind::App: {
                Value f = eval(env, e->a);
                Value arg = eval(env, e->b);
                return apply(*e, f, std::move(arg));
            }
            case TermKind::TensorPair:
                return Value::tensor(eval(env, e->a), eval(env, e->b));
            case TermKind::LetTensor: {
                Value pair = eval(env, e->a);
                expect(*e, pair, Value::Kind::Tensor, "let (x, y) scrutinee");
                auto inner = extend(extend(env, e->name, *pair.fst), e->name2, *pair.snd);
                return eval(inner, e->b);
            }
            case TermKind::WithPair:
                return Value::with_pair(eval(env, e->a), eval(env, e->b));
            case TermKind::Proj: {
                Value pair = eval(env, e->a);
                expect(*e, pair, Value::Kind::With, "projection scrutinee");
                return e->index == 1 ? *pair.fst : *pair.snd;
            }
            case TermKind::BangIntro: return Value::banged(eval(env, e->a));
            case TermKind::LetBang: {
                Value banged = eval(env, e->a);
                expect(*e, banged, Value::Kind::Banged, "let !x scrutinee");
                return eval(extend(env, e->name, *banged.fst), e->b);
            }
            case TermKind::Inl: return Value::tagged(true, eval(env, e->a));
            case TermKind::Inr: return Value::tagged(false, eval(env, e->a));
            case TermKind::Case: {
                Value scrut = eval(env, e->a);
                // Bernoulli samples are booleans typed Unit + Unit
                if (scrut.kind == Value::Kind::Bool)
                    scrut = Value::tagged(scrut.boolean, Value::unit());
                expect(*e, scrut, Value::Kind::Tagged, "case scrutinee");
                if (scrut.tag_left) return eval(extend(env, e->name, *scrut.fst), e->b);
                return eval(extend(env, e->name2, *scrut.fst), e->c);
            }
            case TermKind::Return: return Value::distribution(dirac(eval(env, e->a)));
            case TermKind::Bind: {
                Value first = eval(env, e->a);
                expect(*e, first, Value::Kind::Dist, "bind source");
                auto kernel = [&](const Value& v) -> Dist<Value> {
                    Value inner = eval(extend(env, e->name, v), e->b);
                    expect(*e, inner, Value::Kind::Dist, "bind body");
                    return *inner.dist;
                };
                return Value::distribution(kleisli_bind<Value, Value>(*first.dist, kernel));
            }
            case TermKind::Prim:
                return Value::make_builtin(
                    std::make_shared<BuiltinData>(BuiltinData{e->name, e->args, {}}));
        }
        run_fail(*e, "unhandled term form");
    }

    Value apply(const Term& at, const Value& f, Value arg) {
        if (f.kind == Value::Kind::Closure) {
            return eval(extend(f.closure->env, f.closure->param, std::move(arg)),
                        f.closure->body);
        }
        if (f.kind == Value::Kind::Builtin) {
            BuiltinData next = *f.builtin;
            next.applied.push_back(std::move(arg));
            if (next.applied.size() < builtin_arity(next.name))
                return Value::make_builtin(std::make_shared<BuiltinData>(std::move(next)));
            return run_builtin(at, next);
        }
        run_fail(at, "application of a non-function value");
    }

private:
    static std::shared_ptr<const EnvData> extend(const std::shared_ptr<const EnvData>& env,
                                                 const std::string& x, Value v) {
        auto next = std::make_shared<EnvData>(*env);
        next->vars.insert_or_assign(x, std::move(v));
        return next;
    }
    static void expect(const Term& at, const Value& v, Value::Kind k, const std::string& what) {
        if (v.kind != k) run_fail(at, what + " evaluated to " + v.str());
    }
    static double unwrap_real(const Term& at, const Value& v, const std::string& what) {
        if (v.kind != Value::Kind::Real) run_fail(at, what + " evaluated to " + v.str());
        return v.real;
    }

    Value run_builtin(const Term& at, const BuiltinData& b) {
        const std::string& name = b.name;
        if (name == "Laplace") {
            const Value& arg = b.applied[0];
            expect(at, arg, Value::Kind::Banged, "Laplace argument");
            double x = unwrap_real(at, *arg.fst, "Laplace argument payload");
            double scale = 1.0 / b.args[0].num;
            Dist<double> noise = laplace_grid(x, scale, cfg_.grid_for(x, scale));
            return Value::distribution(
                map_support<double, Value>(noise, [](double v) { return Value::of_real(v); }));
        }
        if (name == "Gaussian" || name == "Normal") {
            double x = unwrap_real(at, b.applied[0], name + " argument");
            double sigma = 1.0;
            if (name == "Gaussian") {
                double eps = b.args[0].num, delta = b.args[1].num;
                sigma = 2.0 * std::log(1.25 / delta) / eps; // scale as stated, not squared
            }
            Dist<double> noise = gaussian_grid(x, sigma, cfg_.grid_for(x, sigma));
            return Value::distribution(
                map_support<double, Value>(noise, [](double v) { return Value::of_real(v); }));
        }
        if (name == "Poisson") {
            double alpha = unwrap_real(at, b.applied[0], "Poisson argument");
            Dist<std::uint64_t> d = poisson_trunc(alpha, poisson_default_cutoff(alpha));
            return Value::distribution(map_support<std::uint64_t, Value>(
                d, [](std::uint64_t n) { return Value::of_nat(n); }));
        }
        if (name == "Bernoulli") {
            double p = unwrap_real(at, b.applied[0], "Bernoulli argument");
            return Value::distribution(map_support<bool, Value>(
                bernoulli(p), [](bool v) { return Value::of_bool(v); }));
        }
        if (name == "size") {
            const Value& arg = b.applied[0];
            expect(at, arg, Value::Kind::Db, "size argument");
            return Value::of_real(static_cast<double>(arg.db->size()));
        }
        if (name == "count") {
            const Value& arg = b.applied[0];
            expect(at, arg, Value::Kind::Db, "count argument");
            auto it = cfg_.predicates.find(b.args[0].text);
            if (it == cfg_.predicates.end())
                throw Diagnostic("unknown-predicate", at.line, at.col,
                                 "predicate '" + b.args[0].text + "' is not defined");
            std::size_t n = 0;
            for (const auto& row : arg.db->rows)
                if (it->second.matches(row)) ++n;
            return Value::of_real(static_cast<double>(n));
        }
        if (name == "to_real")
            return Value::of_real(unwrap_real(at, b.applied[0], "to_real argument"));
        if (name == "add_ceil") {
            const Value& arg = b.applied[0];
            expect(at, arg, Value::Kind::Tensor, "add_ceil argument");
            return Value::of_real(unwrap_real(at, *arg.fst, "add_ceil left") +
                                  unwrap_real(at, *arg.snd, "add_ceil right"));
        }
        if (name == "AC") {
            const Value& f = b.applied[0];
            expect(at, f, Value::Kind::Banged, "AC step function");
            const Value& init = b.applied[1];
            expect(at, init, Value::Kind::Banged, "AC initial state");
            const Value& db = b.applied[2];
            int n = static_cast<int>(b.args[0].num);
            Dist<Value> state = dirac(*init.fst);
            for (int i = 0; i < n; ++i) {
                auto kernel = [&](const Value& v) -> Dist<Value> {
                    Value step = apply(at, apply(at, *f.fst, Value::banged(v)), db);
                    expect(at, step, Value::Kind::Dist, "AC step result");
                    return *step.dist;
                };
                state = kleisli_bind<Value, Value>(state, kernel);
            }
            return Value::distribution(std::move(state));
        }
        run_fail(at, "unknown primitive " + name);
    }

    const EvalConfig& cfg_;
};

} // namespace detail

inline Value eval(const std::map<std::string, Value>& env, const TermPtr& e,
                  const EvalConfig& cfg = {}) {
    auto data = std::make_shared<EnvData>(EnvData{env});
    return detail::Evaluator(cfg).eval(data, e);
}

// Parse, check, then evaluate a whole program.  A program of type
// Db -o ... or !{k} Db -o ... is applied to the supplied database.
struct RunResult {
    TermPtr program;
    Judgment judgment;
    Value value;
};

inline RunResult run_program(const std::string& source, const std::optional<Database>& input,
                             const EvalConfig& cfg = {}) {
    RunResult r;
    r.program = parse_term(source);
    r.judgment = infer({}, r.program);
    Value v = eval({}, r.program, cfg);
    const TypePtr& t = r.judgment.type;
    if (t->kind == TypeKind::Lolli &&
        (t->left->kind == TypeKind::Db ||
         (t->left->kind == TypeKind::Bang && t->left->left->kind == TypeKind::Db))) {
        if (!input)
            throw Error("run-input", "program takes a database; provide one with --input");
        Value dbv = Value::database(*input);
        if (t->left->kind == TypeKind::Bang) dbv = Value::banged(std::move(dbv));
        detail::Evaluator ev(cfg);
        v = ev.apply(*r.program, v, std::move(dbv));
    }
    r.value = std::move(v);
    return r;
}

} // namespace gfuzz
