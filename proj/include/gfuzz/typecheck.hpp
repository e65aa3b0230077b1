// Bottom-up sensitivity synthesis for graded Fuzz.
//
// The checker computes a principal type and a pointwise-least usage map.
// Context splitting is made deterministic: multiplicative positions add
// usage maps, additive positions (with-pairs, case branches, bind) take the
// pointwise max.  Eliminated scrutinees count at least once whenever a
// positive multiplier is forced (a case scrutinee is always inspected).

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gfuzz/lang.hpp"
#include "gfuzz/numerics.hpp"

namespace gfuzz {

using TypeEnv = std::map<std::string, TypePtr>;

struct Judgment {
    TypePtr type;
    SensMap usage;
};

namespace detail {

[[noreturn]] inline void diag(const std::string& code, const Term& at, const std::string& msg) {
    throw Diagnostic(code, at.line, at.col, msg);
}

inline void check_static_args(const Term& at, const std::vector<StaticArg>& args,
                              const std::string& shape, const std::string& name) {
    // shape: one char per arg, 'n' number, 'i' ident, 't' type
    if (args.size() != shape.size())
        diag("invalid-static-arg", at,
             name + " expects " + std::to_string(shape.size()) + " static argument(s)");
    for (std::size_t i = 0; i < shape.size(); ++i) {
        StaticArg::Kind want = shape[i] == 'n'   ? StaticArg::Kind::Num
                               : shape[i] == 'i' ? StaticArg::Kind::Ident
                                                 : StaticArg::Kind::Ty;
        if (args[i].kind != want)
            diag("invalid-static-arg", at,
                 name + ": static argument " + std::to_string(i + 1) + " has the wrong kind");
    }
}

} // namespace detail

// Advanced-composition grade: eps* = eps sqrt(2 n ln(1/d')) + n eps (e^eps - 1),
// delta* = n delta + d'.
inline Grade advanced_composition_grade(int n, double eps, double delta, double dprime) {
    double eps_star = eps * std::sqrt(2.0 * n * std::log(1.0 / dprime)) +
                      n * eps * (std::exp(eps) - 1.0);
    return Grade::ed(eps_star, static_cast<double>(n) * delta + dprime);
}

// Types of the fixed primitive table.  Static arguments are validated here.
inline TypePtr primitive_signature(const TermPtr& at_term) {
    const Term& at = *at_term;
    const std::string& name = at.name;
    const std::vector<StaticArg>& args = at.args;

    if (name == "Laplace") {
        detail::check_static_args(at, args, "n", name);
        if (!(args[0].num > 0)) detail::diag("invalid-static-arg", at, "Laplace needs eps > 0");
        return t_lolli(t_bang(ExtReal(args[0].rat), t_real()),
                       t_monad(DivFamily::MD, Grade::unit_of(MonoidId::Unit), t_real()));
    }
    if (name == "Gaussian") {
        detail::check_static_args(at, args, "nn", name);
        if (!(args[0].num > 0)) detail::diag("invalid-static-arg", at, "Gaussian needs eps > 0");
        if (!(args[1].num > 0 && args[1].num < 1))
            detail::diag("invalid-static-arg", at, "Gaussian needs delta in (0,1)");
        return t_lolli(t_ceilreal(),
                       t_monad(DivFamily::ED, Grade::ed(args[0].num, args[1].num), t_real()));
    }
    if (name == "Bernoulli") {
        detail::check_static_args(at, args, "", name);
        return t_lolli(t_real(), t_monad(DivFamily::SD, Grade::unit_of(MonoidId::Unit),
                                         t_sum(t_unit(), t_unit())));
    }
    if (name == "Normal") {
        detail::check_static_args(at, args, "", name);
        return t_lolli(t_ceilreal(),
                       t_monad(DivFamily::KL, Grade::scalar(MonoidId::KL, 1.0), t_real()));
    }
    if (name == "Poisson") {
        // natural outcomes; CeilReal carries the rounded-up metric they need
        detail::check_static_args(at, args, "", name);
        return t_lolli(t_ceilreal(),
                       t_monad(DivFamily::HD, Grade::scalar(MonoidId::HD, 0.5), t_ceilreal()));
    }
    if (name == "AC") {
        detail::check_static_args(at, args, "nnnnt", name);
        double n_raw = args[0].num;
        if (n_raw < 1 || n_raw != std::floor(n_raw))
            detail::diag("invalid-static-arg", at, "AC needs an integer n >= 1");
        int n = static_cast<int>(n_raw);
        double eps = args[1].num, delta = args[2].num, dprime = args[3].num;
        if (!(eps > 0)) detail::diag("invalid-static-arg", at, "AC needs eps > 0");
        if (!(delta > 0 && delta < 1))
            detail::diag("invalid-static-arg", at, "AC needs delta in (0,1)");
        if (!(dprime > 0 && dprime < 1))
            detail::diag("invalid-static-arg", at, "AC needs delta' in (0,1)");
        TypePtr tau = args[4].ty;
        auto step = t_lolli(t_bang(ExtReal::infinity(), tau),
                            t_lolli(t_db(), t_monad(DivFamily::ED, Grade::ed(eps, delta), tau)));
        auto out = t_lolli(t_bang(ExtReal::infinity(), tau),
                           t_lolli(t_db(), t_monad(DivFamily::ED,
                                                   advanced_composition_grade(n, eps, delta, dprime),
                                                   tau)));
        return t_lolli(t_bang(ExtReal::infinity(), step), out);
    }
    if (name == "size") {
        detail::check_static_args(at, args, "", name);
        return t_lolli(t_db(), t_ceilreal());
    }
    if (name == "count") {
        detail::check_static_args(at, args, "i", name);
        return t_lolli(t_db(), t_ceilreal());
    }
    if (name == "to_real") {
        detail::check_static_args(at, args, "", name);
        return t_lolli(t_ceilreal(), t_real());
    }
    if (name == "add_ceil") {
        detail::check_static_args(at, args, "", name);
        return t_lolli(t_tensor(t_ceilreal(), t_ceilreal()), t_ceilreal());
    }
    detail::diag("unknown-primitive", at, "unknown primitive '" + name + "'");
}

namespace detail {

// Least upper bound of branch types: grades join componentwise (sound by
// subsumption); everything else must agree.
inline TypePtr type_join(const TypePtr& a, const TypePtr& b, const Term& at) {
    if (type_equal(a, b)) return a;
    if (a->kind != b->kind)
        diag("type-mismatch", at,
             "branch types differ: " + type_str(a) + " vs " + type_str(b));
    switch (a->kind) {
        case TypeKind::Lolli:
            if (!type_equal(a->left, b->left))
                diag("type-mismatch", at,
                     "branch types differ in a function argument: " + type_str(a) + " vs " +
                         type_str(b));
            return t_lolli(a->left, type_join(a->right, b->right, at));
        case TypeKind::Tensor:
            return t_tensor(type_join(a->left, b->left, at), type_join(a->right, b->right, at));
        case TypeKind::With:
            return t_with(type_join(a->left, b->left, at), type_join(a->right, b->right, at));
        case TypeKind::Sum:
            return t_sum(type_join(a->left, b->left, at), type_join(a->right, b->right, at));
        case TypeKind::Bang:
            if (a->scale != b->scale)
                diag("type-mismatch", at,
                     "branch types differ in a bang annotation: " + type_str(a) + " vs " +
                         type_str(b));
            return t_bang(a->scale, type_join(a->left, b->left, at));
        case TypeKind::Monad: {
            if (a->family != b->family)
                diag("monoid-mismatch", at,
                     "branch types mix divergence families: " + type_str(a) + " vs " + type_str(b));
            return t_monad(a->family, grade_join(a->grade, b->grade),
                           type_join(a->left, b->left, at));
        }
        default:
            diag("type-mismatch", at, "branch types differ: " + type_str(a) + " vs " + type_str(b));
    }
}

class Inferencer {
public:
    explicit Inferencer(TypeEnv env) : env_(std::move(env)) {}

    Judgment run(const TermPtr& e) {
        switch (e->kind) {
            case TermKind::Var: {
                auto it = env_.find(e->name);
                if (it == env_.end()) diag("unbound-variable", *e, "unbound variable " + e->name);
                SensMap u;
                u.emplace(e->name, ExtReal(1));
                return {it->second, std::move(u)};
            }
            case TermKind::RealConst: return {t_real(), {}};
            case TermKind::UnitVal: return {t_unit(), {}};
            case TermKind::Add: {
                Judgment l = run(e->a), r = run(e->b);
                require_real(*e, l.type, "left operand of +");
                require_real(*e, r.type, "right operand of +");
                return {t_real(), add_ctx(l.usage, r.usage)};
            }
            case TermKind::Lam: {
                auto saved = swap_binding(e->name, e->type);
                Judgment body = run(e->a);
                restore_binding(e->name, saved);
                ExtReal used = usage_of(body.usage, e->name);
                if (!(used <= ExtReal(1)))
                    diag("sensitivity-exceeded", *e,
                         "lambda argument " + e->name + " is used at sensitivity " + used.str() +
                             " > 1 (wrap it in a bang to admit this)");
                return {t_lolli(e->type, body.type), drop_var(body.usage, e->name)};
            }
            case TermKind::App: {
                Judgment f = run(e->a), arg = run(e->b);
                if (f.type->kind != TypeKind::Lolli)
                    diag("type-mismatch", *e,
                         "application head has type " + type_str(f.type) + ", not a function");
                if (!subtype(arg.type, f.type->left))
                    diag("type-mismatch", *e,
                         "argument type " + type_str(arg.type) + " does not match parameter " +
                             type_str(f.type->left));
                return {f.type->right, add_ctx(f.usage, arg.usage)};
            }
            case TermKind::TensorPair: {
                Judgment l = run(e->a), r = run(e->b);
                return {t_tensor(l.type, r.type), add_ctx(l.usage, r.usage)};
            }
            case TermKind::LetTensor: {
                Judgment scrut = run(e->a);
                if (scrut.type->kind != TypeKind::Tensor)
                    diag("type-mismatch", *e,
                         "let (x, y) scrutinee has type " + type_str(scrut.type));
                auto saved_x = swap_binding(e->name, scrut.type->left);
                auto saved_y = swap_binding(e->name2, scrut.type->right);
                Judgment body = run(e->b);
                restore_binding(e->name2, saved_y);
                restore_binding(e->name, saved_x);
                ExtReal r = ext_max(usage_of(body.usage, e->name), usage_of(body.usage, e->name2));
                SensMap rest = drop_var(drop_var(body.usage, e->name), e->name2);
                if (r.is_zero()) return {body.type, std::move(rest)}; // pair never inspected
                return {body.type, add_ctx(scale_ctx(r, scrut.usage), rest)};
            }
            case TermKind::WithPair: {
                Judgment l = run(e->a), r = run(e->b);
                return {t_with(l.type, r.type), max_ctx(l.usage, r.usage)};
            }
            case TermKind::Proj: {
                Judgment j = run(e->a);
                if (j.type->kind != TypeKind::With)
                    diag("type-mismatch", *e, "projection from " + type_str(j.type));
                return {e->index == 1 ? j.type->left : j.type->right, j.usage};
            }
            case TermKind::BangIntro: {
                if (!(ExtReal(0) < e->scale))
                    diag("type-mismatch", *e, "bang annotation must be > 0");
                Judgment j = run(e->a);
                return {t_bang(e->scale, j.type), scale_ctx(e->scale, j.usage)};
            }
            case TermKind::LetBang: {
                Judgment scrut = run(e->a);
                if (scrut.type->kind != TypeKind::Bang)
                    diag("type-mismatch", *e,
                         "let !x scrutinee has type " + type_str(scrut.type) + ", not a bang");
                ExtReal s = scrut.type->scale;
                auto saved = swap_binding(e->name, scrut.type->left);
                Judgment body = run(e->b);
                restore_binding(e->name, saved);
                ExtReal need = usage_of(body.usage, e->name);
                SensMap rest = drop_var(body.usage, e->name);
                if (need.is_zero()) return {body.type, std::move(rest)};
                // smallest r with r * s >= need; infinite supplies floor at 1
                ExtReal r = s.is_infinite() ? ExtReal(1) : ext_div(need, s);
                return {body.type, add_ctx(scale_ctx(r, scrut.usage), rest)};
            }
            case TermKind::Inl:
            case TermKind::Inr: {
                Judgment payload = run(e->a);
                const TypePtr& side = e->kind == TermKind::Inl ? e->type->left : e->type->right;
                if (!subtype(payload.type, side))
                    diag("type-mismatch", *e,
                         "injection payload " + type_str(payload.type) + " does not match " +
                             type_str(side));
                return {e->type, payload.usage};
            }
            case TermKind::Case: {
                Judgment scrut = run(e->a);
                if (scrut.type->kind != TypeKind::Sum)
                    diag("type-mismatch", *e, "case scrutinee has type " + type_str(scrut.type));
                auto saved_l = swap_binding(e->name, scrut.type->left);
                Judgment left = run(e->b);
                restore_binding(e->name, saved_l);
                auto saved_r = swap_binding(e->name2, scrut.type->right);
                Judgment right = run(e->c);
                restore_binding(e->name2, saved_r);
                TypePtr joined = type_join(left.type, right.type, *e);
                ExtReal r =
                    ext_max(usage_of(left.usage, e->name), usage_of(right.usage, e->name2));
                // the branch choice is observable, so the scrutinee counts
                // at least once even if both binders are unused
                if (r.is_zero()) r = ExtReal(1);
                SensMap branches = max_ctx(drop_var(left.usage, e->name),
                                           drop_var(right.usage, e->name2));
                return {joined, add_ctx(scale_ctx(r, scrut.usage), branches)};
            }
            case TermKind::Return: {
                Judgment j = run(e->a);
                return {t_monad(e->family, Grade::unit_of(monoid_of(e->family)), j.type),
                        scale_ctx(ExtReal::infinity(), j.usage)};
            }
            case TermKind::Bind: {
                Judgment first = run(e->a);
                if (first.type->kind != TypeKind::Monad)
                    diag("type-mismatch", *e,
                         "bind source has type " + type_str(first.type) + ", not monadic");
                auto saved = swap_binding(e->name, first.type->left);
                Judgment second = run(e->b);
                restore_binding(e->name, saved);
                if (second.type->kind != TypeKind::Monad)
                    diag("type-mismatch", *e,
                         "bind body has type " + type_str(second.type) + ", not monadic");
                if (second.type->family != first.type->family)
                    diag("monoid-mismatch", *e,
                         std::string("bind mixes divergence families ") +
                             family_name(first.type->family) + " and " +
                             family_name(second.type->family));
                Grade g = grade_compose(first.type->grade, second.type->grade);
                SensMap usage = max_ctx(first.usage, drop_var(second.usage, e->name));
                return {t_monad(first.type->family, g, second.type->left), std::move(usage)};
            }
            case TermKind::Prim: return {primitive_signature(e), {}};
        }
        diag("type-mismatch", *e, "unhandled term form");
    }

private:
    void require_real(const Term& at, const TypePtr& t, const std::string& what) {
        if (t->kind != TypeKind::Real)
            diag("type-mismatch", at, what + " has type " + type_str(t) + ", expected Real");
    }
    TypePtr swap_binding(const std::string& x, TypePtr t) {
        TypePtr old;
        auto it = env_.find(x);
        if (it != env_.end()) old = it->second;
        env_[x] = std::move(t);
        return old;
    }
    void restore_binding(const std::string& x, const TypePtr& old) {
        if (old)
            env_[x] = old;
        else
            env_.erase(x);
    }

    TypeEnv env_;
};

} // namespace detail

inline Judgment infer(const TypeEnv& env, const TermPtr& e) {
    return detail::Inferencer(env).run(e);
}

// Grading subsumption: the target may only raise monad grades.
inline Judgment subsume(const Judgment& j, const TypePtr& target) {
    struct Walk {
        static void check(const TypePtr& a, const TypePtr& b) {
            if (!a || !b || a->kind != b->kind) mismatch(a, b);
            switch (a->kind) {
                case TypeKind::Real:
                case TypeKind::Unit:
                case TypeKind::CeilReal:
                case TypeKind::Db: return;
                case TypeKind::Lolli:
                case TypeKind::Tensor:
                case TypeKind::With:
                case TypeKind::Sum:
                    check(a->left, b->left);
                    check(a->right, b->right);
                    return;
                case TypeKind::Bang:
                    if (a->scale != b->scale) mismatch(a, b);
                    check(a->left, b->left);
                    return;
                case TypeKind::Monad:
                    if (a->family != b->family) mismatch(a, b);
                    if (!grade_leq(a->grade, b->grade))
                        throw Error("subsumption-failure",
                                    "grade " + a->grade.str() + " does not precede " +
                                        b->grade.str());
                    check(a->left, b->left);
                    return;
            }
        }
        [[noreturn]] static void mismatch(const TypePtr& a, const TypePtr& b) {
            throw Error("subsumption-failure",
                        "target differs beyond monad grades: " + type_str(a) + " vs " +
                            type_str(b));
        }
    };
    Walk::check(j.type, target);
    return {target, j.usage};
}

} // namespace gfuzz
