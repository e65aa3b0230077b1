// Abstract syntax, concrete syntax, and context algebra for graded Fuzz.
//
// Grammar (terms):
//   e ::= x | k | e1 + e2 | () | \(x : T). e | e1 e2
//       | (e1, e2) | let (x, y) = e in e' | <e1, e2> | pi1 e | pi2 e
//       | !{r} e | !e | let !x = e in e' | let x : T = e in e'   (sugar)
//       | inl[T1 + T2] e | inr[T1 + T2] e
//       | case e of inl x -> e1 | inr y -> e2
//       | bind x <- e1; e2 | return[D] e | Prim | Prim[args]
// and (types):
//   T ::= Real | Unit | CeilReal | Db | T -o T | T + T | T * T | T & T
//       | !{r} T | O[D] T | O[D g] T
// Sensitivities r are exact rationals ("2", "1/2", "0.5") or "inf"; grades g
// are an (eps, delta) pair for ED or a scalar for KL/XD/HD.  '#' starts a
// line comment.

#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gfuzz/numerics.hpp"

namespace gfuzz {

// Parse/type errors carry a source position.
class Diagnostic : public Error {
public:
    Diagnostic(std::string code, int line, int col, const std::string& msg)
        : Error(std::move(code),
                "line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line_(line), col_(col), message_(msg) {}
    int line() const { return line_; }
    int col() const { return col_; }
    const std::string& message() const { return message_; }

private:
    int line_;
    int col_;
    std::string message_;
};

// ---- Types -------------------------------------------------------------------

enum class TypeKind { Real, Unit, CeilReal, Db, Lolli, Tensor, With, Sum, Bang, Monad };

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
    TypeKind kind = TypeKind::Unit;
    TypePtr left;    // lolli/tensor/with/sum left, bang/monad payload
    TypePtr right;   // lolli/tensor/with/sum right
    ExtReal scale;   // bang
    DivFamily family = DivFamily::MD; // monad
    Grade grade = Grade::unit_of(MonoidId::Unit); // monad

    Type() = default;
    explicit Type(TypeKind k) : kind(k) {}
};

namespace detail {
inline TypePtr type_node(TypeKind k, TypePtr left = nullptr, TypePtr right = nullptr) {
    auto t = std::make_shared<Type>(k);
    t->left = std::move(left);
    t->right = std::move(right);
    return t;
}
} // namespace detail

inline TypePtr t_real() {
    static TypePtr t = detail::type_node(TypeKind::Real);
    return t;
}
inline TypePtr t_unit() {
    static TypePtr t = detail::type_node(TypeKind::Unit);
    return t;
}
inline TypePtr t_ceilreal() {
    static TypePtr t = detail::type_node(TypeKind::CeilReal);
    return t;
}
inline TypePtr t_db() {
    static TypePtr t = detail::type_node(TypeKind::Db);
    return t;
}
inline TypePtr t_lolli(TypePtr a, TypePtr b) {
    return detail::type_node(TypeKind::Lolli, std::move(a), std::move(b));
}
inline TypePtr t_tensor(TypePtr a, TypePtr b) {
    return detail::type_node(TypeKind::Tensor, std::move(a), std::move(b));
}
inline TypePtr t_with(TypePtr a, TypePtr b) {
    return detail::type_node(TypeKind::With, std::move(a), std::move(b));
}
inline TypePtr t_sum(TypePtr a, TypePtr b) {
    return detail::type_node(TypeKind::Sum, std::move(a), std::move(b));
}
inline TypePtr t_bang(ExtReal r, TypePtr payload) {
    if (!(ExtReal(0) < r)) throw Error("type-invalid", "bang annotation must be > 0");
    auto t = std::make_shared<Type>(TypeKind::Bang);
    t->left = std::move(payload);
    t->scale = std::move(r);
    return t;
}
inline TypePtr t_monad(DivFamily f, Grade g, TypePtr payload) {
    if (monoid_of(f) != g.monoid())
        throw MonoidMismatch(std::string("monad grade monoid must match ") + family_name(f));
    auto t = std::make_shared<Type>(TypeKind::Monad);
    t->left = std::move(payload);
    t->family = f;
    t->grade = g;
    return t;
}

inline bool type_equal(const TypePtr& a, const TypePtr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case TypeKind::Real:
        case TypeKind::Unit:
        case TypeKind::CeilReal:
        case TypeKind::Db: return true;
        case TypeKind::Lolli:
        case TypeKind::Tensor:
        case TypeKind::With:
        case TypeKind::Sum:
            return type_equal(a->left, b->left) && type_equal(a->right, b->right);
        case TypeKind::Bang: return a->scale == b->scale && type_equal(a->left, b->left);
        case TypeKind::Monad:
            return a->family == b->family && a->grade == b->grade &&
                   type_equal(a->left, b->left);
    }
    return false;
}

// id : a -> b is non-expansive: grades may grow (covariantly), bang scales
// may shrink toward the target, function arguments flip.
inline bool subtype(const TypePtr& a, const TypePtr& b) {
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case TypeKind::Real:
        case TypeKind::Unit:
        case TypeKind::CeilReal:
        case TypeKind::Db: return true;
        case TypeKind::Lolli: return subtype(b->left, a->left) && subtype(a->right, b->right);
        case TypeKind::Tensor:
        case TypeKind::With:
        case TypeKind::Sum: return subtype(a->left, b->left) && subtype(a->right, b->right);
        case TypeKind::Bang: return b->scale <= a->scale && subtype(a->left, b->left);
        case TypeKind::Monad:
            if (a->family != b->family) return false;
            return grade_leq(a->grade, b->grade) && subtype(a->left, b->left);
    }
    return false;
}

namespace detail {

// Printing levels: lolli 0, sum 1, tensor 2, with 3, prefix/atom 4.
inline int type_level(const Type& t) {
    switch (t.kind) {
        case TypeKind::Lolli: return 0;
        case TypeKind::Sum: return 1;
        case TypeKind::Tensor: return 2;
        case TypeKind::With: return 3;
        default: return 4;
    }
}

inline std::string grade_in_type(const Grade& g) {
    switch (g.monoid()) {
        case MonoidId::Unit: return "";
        case MonoidId::ED:
            return " (" + format_double(g.eps()) + ", " + format_double(g.delta()) + ")";
        default: return " " + format_double(g.alpha());
    }
}

inline std::string type_str_at(const TypePtr& t, int min_level) {
    std::string out;
    switch (t->kind) {
        case TypeKind::Real: out = "Real"; break;
        case TypeKind::Unit: out = "Unit"; break;
        case TypeKind::CeilReal: out = "CeilReal"; break;
        case TypeKind::Db: out = "Db"; break;
        case TypeKind::Lolli:
            out = type_str_at(t->left, 1) + " -o " + type_str_at(t->right, 0);
            break;
        case TypeKind::Sum:
            out = type_str_at(t->left, 1) + " + " + type_str_at(t->right, 2);
            break;
        case TypeKind::Tensor:
            out = type_str_at(t->left, 2) + " * " + type_str_at(t->right, 3);
            break;
        case TypeKind::With:
            out = type_str_at(t->left, 3) + " & " + type_str_at(t->right, 4);
            break;
        case TypeKind::Bang:
            out = "!{" + t->scale.str() + "} " + type_str_at(t->left, 4);
            break;
        case TypeKind::Monad:
            out = std::string("O[") + family_name(t->family) + grade_in_type(t->grade) + "] " +
                  type_str_at(t->left, 4);
            break;
    }
    if (type_level(*t) < min_level) return "(" + out + ")";
    return out;
}

} // namespace detail

inline std::string type_str(const TypePtr& t) { return detail::type_str_at(t, 0); }

// ---- Sensitivity environments --------------------------------------------------

// Variable -> inferred sensitivity; absent means unused, entries are > 0.
using SensMap = std::map<std::string, ExtReal>;

inline SensMap scale_ctx(const ExtReal& r, const SensMap& m) {
    if (!(ExtReal(0) < r)) throw Error("ctx-domain", "scale_ctx requires r > 0");
    SensMap out;
    for (const auto& [x, s] : m) out.emplace(x, ext_mul(r, s));
    return out;
}

inline SensMap add_ctx(const SensMap& a, const SensMap& b) {
    SensMap out = a;
    for (const auto& [x, s] : b) {
        auto it = out.find(x);
        if (it == out.end())
            out.emplace(x, s);
        else
            it->second = ext_add(it->second, s);
    }
    return out;
}

inline SensMap max_ctx(const SensMap& a, const SensMap& b) {
    SensMap out = a;
    for (const auto& [x, s] : b) {
        auto it = out.find(x);
        if (it == out.end())
            out.emplace(x, s);
        else
            it->second = ext_max(it->second, s);
    }
    return out;
}

inline ExtReal usage_of(const SensMap& m, const std::string& x) {
    auto it = m.find(x);
    return it == m.end() ? ExtReal(0) : it->second;
}

inline SensMap drop_var(SensMap m, const std::string& x) {
    m.erase(x);
    return m;
}

inline std::string sensmap_str(const SensMap& m) {
    std::string out = "{";
    bool first = true;
    for (const auto& [x, s] : m) {
        if (!first) out += ", ";
        out += x + ": " + s.str();
        first = false;
    }
    return out + "}";
}

// ---- Terms ---------------------------------------------------------------------

enum class TermKind {
    Var, RealConst, Add, UnitVal, Lam, App, TensorPair, LetTensor, WithPair,
    Proj, BangIntro, LetBang, Inl, Inr, Case, Return, Bind, Prim
};

struct StaticArg {
    enum class Kind { Num, Ident, Ty };
    Kind kind = Kind::Num;
    std::string text; // numbers keep their source spelling
    double num = 0.0;
    Rational rat = Rational(0);
    TypePtr ty;

    static StaticArg number(const std::string& spelling) {
        StaticArg a;
        a.kind = Kind::Num;
        a.text = spelling;
        a.rat = Rational::parse(spelling);
        a.num = spelling.find('/') == std::string::npos ? std::strtod(spelling.c_str(), nullptr)
                                                        : a.rat.to_double();
        return a;
    }
    static StaticArg ident(std::string name) {
        StaticArg a;
        a.kind = Kind::Ident;
        a.text = std::move(name);
        return a;
    }
    static StaticArg type(TypePtr t) {
        StaticArg a;
        a.kind = Kind::Ty;
        a.ty = std::move(t);
        return a;
    }

    bool operator==(const StaticArg& o) const {
        if (kind != o.kind) return false;
        if (kind == Kind::Ty) return type_equal(ty, o.ty);
        return text == o.text;
    }
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
    TermKind kind = TermKind::UnitVal;
    int line = 0, col = 0;
    std::string name;  // var / binder / prim name / case-inl binder
    std::string name2; // second binder (let-tensor, case-inr)
    double value = 0.0;        // real constant
    int index = 0;             // projection (1 or 2)
    ExtReal scale = ExtReal(0);      // bang intro
    DivFamily family = DivFamily::MD; // return
    TypePtr type;              // lam annotation / inl-inr sum type
    TermPtr a, b, c;
    std::vector<StaticArg> args; // prim

    Term() = default;
    explicit Term(TermKind k) : kind(k) {}
};

namespace mk {

inline TermPtr term(Term&& t) { return std::make_shared<Term>(std::move(t)); }

inline TermPtr var(std::string x) {
    Term t{TermKind::Var};
    t.name = std::move(x);
    return term(std::move(t));
}
inline TermPtr real(double v) {
    Term t{TermKind::RealConst};
    t.value = v;
    return term(std::move(t));
}
inline TermPtr add(TermPtr l, TermPtr r) {
    Term t{TermKind::Add};
    t.a = std::move(l);
    t.b = std::move(r);
    return term(std::move(t));
}
inline TermPtr unit() { return term(Term{TermKind::UnitVal}); }
inline TermPtr lam(std::string x, TypePtr ty, TermPtr body) {
    Term t{TermKind::Lam};
    t.name = std::move(x);
    t.type = std::move(ty);
    t.a = std::move(body);
    return term(std::move(t));
}
inline TermPtr app(TermPtr f, TermPtr arg) {
    Term t{TermKind::App};
    t.a = std::move(f);
    t.b = std::move(arg);
    return term(std::move(t));
}
inline TermPtr tensor(TermPtr l, TermPtr r) {
    Term t{TermKind::TensorPair};
    t.a = std::move(l);
    t.b = std::move(r);
    return term(std::move(t));
}
inline TermPtr let_tensor(std::string x, std::string y, TermPtr e1, TermPtr e2) {
    Term t{TermKind::LetTensor};
    t.name = std::move(x);
    t.name2 = std::move(y);
    t.a = std::move(e1);
    t.b = std::move(e2);
    return term(std::move(t));
}
inline TermPtr with_pair(TermPtr l, TermPtr r) {
    Term t{TermKind::WithPair};
    t.a = std::move(l);
    t.b = std::move(r);
    return term(std::move(t));
}
inline TermPtr proj(int i, TermPtr e) {
    Term t{TermKind::Proj};
    t.index = i;
    t.a = std::move(e);
    return term(std::move(t));
}
inline TermPtr bang(ExtReal r, TermPtr e) {
    Term t{TermKind::BangIntro};
    t.scale = std::move(r);
    t.a = std::move(e);
    return term(std::move(t));
}
inline TermPtr let_bang(std::string x, TermPtr e1, TermPtr e2) {
    Term t{TermKind::LetBang};
    t.name = std::move(x);
    t.a = std::move(e1);
    t.b = std::move(e2);
    return term(std::move(t));
}
inline TermPtr inl(TypePtr sum, TermPtr e) {
    Term t{TermKind::Inl};
    t.type = std::move(sum);
    t.a = std::move(e);
    return term(std::move(t));
}
inline TermPtr inr(TypePtr sum, TermPtr e) {
    Term t{TermKind::Inr};
    t.type = std::move(sum);
    t.a = std::move(e);
    return term(std::move(t));
}
inline TermPtr case_of(TermPtr scrut, std::string x, TermPtr el, std::string y, TermPtr er) {
    Term t{TermKind::Case};
    t.a = std::move(scrut);
    t.name = std::move(x);
    t.b = std::move(el);
    t.name2 = std::move(y);
    t.c = std::move(er);
    return term(std::move(t));
}
inline TermPtr ret(DivFamily f, TermPtr e) {
    Term t{TermKind::Return};
    t.family = f;
    t.a = std::move(e);
    return term(std::move(t));
}
inline TermPtr bind(std::string x, TermPtr e1, TermPtr e2) {
    Term t{TermKind::Bind};
    t.name = std::move(x);
    t.a = std::move(e1);
    t.b = std::move(e2);
    return term(std::move(t));
}
inline TermPtr prim(std::string name, std::vector<StaticArg> args = {}) {
    Term t{TermKind::Prim};
    t.name = std::move(name);
    t.args = std::move(args);
    return term(std::move(t));
}

} // namespace mk

inline bool term_equal(const TermPtr& a, const TermPtr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    if (a->name != b->name || a->name2 != b->name2 || a->index != b->index) return false;
    if (a->kind == TermKind::RealConst && a->value != b->value) return false;
    if (a->kind == TermKind::BangIntro && a->scale != b->scale) return false;
    if (a->kind == TermKind::Return && a->family != b->family) return false;
    if ((a->type == nullptr) != (b->type == nullptr)) return false;
    if (a->type && !type_equal(a->type, b->type)) return false;
    if (a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!(a->args[i] == b->args[i])) return false;
    for (auto sel : {&Term::a, &Term::b, &Term::c}) {
        const TermPtr& ca = (*a).*sel;
        const TermPtr& cb = (*b).*sel;
        if ((ca == nullptr) != (cb == nullptr)) return false;
        if (ca && !term_equal(ca, cb)) return false;
    }
    return true;
}

// The fixed primitive names; bare identifiers matching these parse as Prim.
inline bool is_prim_name(const std::string& name) {
    return name == "Laplace" || name == "Gaussian" || name == "Bernoulli" || name == "Normal" ||
           name == "Poisson" || name == "AC" || name == "size" || name == "count" ||
           name == "to_real" || name == "add_ceil";
}

// ---- Pretty printer ------------------------------------------------------------

namespace detail {

// Levels: binder forms 0, additive 1, application 2, prefix 3, atom 4.
inline int term_level(const Term& t) {
    switch (t.kind) {
        case TermKind::Lam:
        case TermKind::LetTensor:
        case TermKind::LetBang:
        case TermKind::Case:
        case TermKind::Bind: return 0;
        case TermKind::Add: return 1;
        case TermKind::App: return 2;
        case TermKind::Proj:
        case TermKind::BangIntro:
        case TermKind::Inl:
        case TermKind::Inr:
        case TermKind::Return: return 3;
        default: return 4;
    }
}

inline std::string term_str_at(const TermPtr& t, int min_level);

inline std::string prim_str(const Term& t) {
    std::string out = t.name;
    if (!t.args.empty()) {
        out += "[";
        bool first = true;
        for (const auto& a : t.args) {
            if (a.kind == StaticArg::Kind::Ty) {
                out += "; " + type_str(a.ty);
                continue;
            }
            if (!first) out += ", ";
            out += a.text;
            first = false;
        }
        out += "]";
    }
    return out;
}

inline std::string term_str_at(const TermPtr& t, int min_level) {
    std::string out;
    switch (t->kind) {
        case TermKind::Var: out = t->name; break;
        case TermKind::RealConst: out = format_double(t->value); break;
        case TermKind::UnitVal: out = "()"; break;
        case TermKind::Add:
            out = term_str_at(t->a, 1) + " + " + term_str_at(t->b, 2);
            break;
        case TermKind::Lam:
            out = "\\(" + t->name + " : " + type_str(t->type) + "). " + term_str_at(t->a, 0);
            break;
        case TermKind::App:
            out = term_str_at(t->a, 2) + " " + term_str_at(t->b, 3);
            break;
        case TermKind::TensorPair:
            out = "(" + term_str_at(t->a, 0) + ", " + term_str_at(t->b, 0) + ")";
            break;
        case TermKind::LetTensor:
            out = "let (" + t->name + ", " + t->name2 + ") = " + term_str_at(t->a, 0) + " in " +
                  term_str_at(t->b, 0);
            break;
        case TermKind::WithPair: {
            std::string fst = term_str_at(t->a, 0);
            if (!fst.empty() && fst[0] == '-') fst = "(" + fst + ")";
            out = "<" + fst + ", " + term_str_at(t->b, 0) + ">";
            break;
        }
        case TermKind::Proj:
            out = (t->index == 1 ? "pi1 " : "pi2 ") + term_str_at(t->a, 3);
            break;
        case TermKind::BangIntro:
            out = "!{" + t->scale.str() + "} " + term_str_at(t->a, 3);
            break;
        case TermKind::LetBang:
            out = "let !" + t->name + " = " + term_str_at(t->a, 0) + " in " + term_str_at(t->b, 0);
            break;
        case TermKind::Inl:
            out = "inl[" + type_str(t->type) + "] " + term_str_at(t->a, 3);
            break;
        case TermKind::Inr:
            out = "inr[" + type_str(t->type) + "] " + term_str_at(t->a, 3);
            break;
        case TermKind::Case:
            out = "case " + term_str_at(t->a, 1) + " of inl " + t->name + " -> " +
                  term_str_at(t->b, 0) + " | inr " + t->name2 + " -> " + term_str_at(t->c, 0);
            break;
        case TermKind::Return:
            out = std::string("return[") + family_name(t->family) + "] " + term_str_at(t->a, 3);
            break;
        case TermKind::Bind:
            out = "bind " + t->name + " <- " + term_str_at(t->a, 1) + "; " + term_str_at(t->b, 0);
            break;
        case TermKind::Prim: out = prim_str(*t); break;
    }
    if (term_level(*t) < min_level) return "(" + out + ")";
    return out;
}

} // namespace detail

inline std::string term_str(const TermPtr& t) { return detail::term_str_at(t, 0); }

// ---- Lexer and parser ------------------------------------------------------------

namespace detail {

enum class Tok {
    Ident, Number, Lambda, LParen, RParen, LBrack, RBrack, LBrace, RBrace, Lt, Gt,
    Comma, Dot, Semi, Colon, Pipe, Plus, Star, Amp, Bang, Eq, Lolli, Arrow, BindArrow,
    End
};

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

inline bool ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '\'';
}

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }
    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        skip_space();
        current_ = next_token();
    }
    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++pos_;
                ++col_;
            } else if (c == '\n') {
                ++pos_;
                ++line_;
                col_ = 1;
            } else {
                break;
            }
        }
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw Diagnostic("syntax-error", line_, col_, msg);
    }
    Token next_token() {
        int line = line_, col = col_;
        auto tok = [&](Tok k, std::string text, std::size_t len) {
            pos_ += len;
            col_ += static_cast<int>(len);
            return Token{k, std::move(text), line, col};
        };
        if (pos_ >= src_.size()) return Token{Tok::End, "", line, col};
        char c = src_[pos_];
        char n = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
        if (c == '\\') return tok(Tok::Lambda, "\\", 1);
        if (c == '(') return tok(Tok::LParen, "(", 1);
        if (c == ')') return tok(Tok::RParen, ")", 1);
        if (c == '[') return tok(Tok::LBrack, "[", 1);
        if (c == ']') return tok(Tok::RBrack, "]", 1);
        if (c == '{') return tok(Tok::LBrace, "{", 1);
        if (c == '}') return tok(Tok::RBrace, "}", 1);
        if (c == ',') return tok(Tok::Comma, ",", 1);
        if (c == '.') return tok(Tok::Dot, ".", 1);
        if (c == ';') return tok(Tok::Semi, ";", 1);
        if (c == ':') return tok(Tok::Colon, ":", 1);
        if (c == '|') return tok(Tok::Pipe, "|", 1);
        if (c == '+') return tok(Tok::Plus, "+", 1);
        if (c == '*') return tok(Tok::Star, "*", 1);
        if (c == '&') return tok(Tok::Amp, "&", 1);
        if (c == '!') return tok(Tok::Bang, "!", 1);
        if (c == '=') return tok(Tok::Eq, "=", 1);
        if (c == '<') {
            if (n == '-') return tok(Tok::BindArrow, "<-", 2);
            return tok(Tok::Lt, "<", 1);
        }
        if (c == '>') return tok(Tok::Gt, ">", 1);
        if (c == '-') {
            char n2 = pos_ + 2 < src_.size() ? src_[pos_ + 2] : '\0';
            if (n == 'o' && !ident_char(n2)) return tok(Tok::Lolli, "-o", 2);
            if (n == '>') return tok(Tok::Arrow, "->", 2);
            if (n >= '0' && n <= '9') return lex_number();
            fail("unexpected '-'");
        }
        if (c >= '0' && c <= '9') return lex_number();
        if (ident_char(c) && !(c >= '0' && c <= '9')) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && ident_char(src_[pos_])) {
                ++pos_;
                ++col_;
            }
            return Token{Tok::Ident, src_.substr(start, pos_ - start), line, col};
        }
        fail(std::string("unexpected character '") + c + "'");
    }
    Token lex_number() {
        int line = line_, col = col_;
        std::size_t start = pos_;
        if (src_[pos_] == '-') {
            ++pos_;
            ++col_;
        }
        bool seen_dot = false;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c >= '0' && c <= '9') {
                ++pos_;
                ++col_;
            } else if (c == '.' && !seen_dot && pos_ + 1 < src_.size() && src_[pos_ + 1] >= '0' &&
                       src_[pos_ + 1] <= '9') {
                seen_dot = true;
                ++pos_;
                ++col_;
            } else {
                break;
            }
        }
        // exact fraction "p/q"
        if (!seen_dot && pos_ + 1 < src_.size() && src_[pos_] == '/' && src_[pos_ + 1] >= '0' &&
            src_[pos_ + 1] <= '9') {
            pos_ += 1;
            col_ += 1;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                ++pos_;
                ++col_;
            }
        }
        return Token{Tok::Number, src_.substr(start, pos_ - start), line, col};
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token current_{Tok::End, "", 1, 1};
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    TermPtr parse_term_all() {
        TermPtr t = parse_term();
        expect(Tok::End, "end of input");
        return t;
    }
    TypePtr parse_type_all() {
        TypePtr t = parse_type();
        expect(Tok::End, "end of input");
        return t;
    }

private:
    [[noreturn]] void fail(const Token& at, const std::string& msg) const {
        throw Diagnostic("syntax-error", at.line, at.col, msg);
    }
    Token expect(Tok k, const std::string& what) {
        Token t = lex_.take();
        if (t.kind != k) fail(t, "expected " + what + ", found '" + t.text + "'");
        return t;
    }
    bool accept(Tok k) {
        if (lex_.peek().kind == k) {
            lex_.take();
            return true;
        }
        return false;
    }
    std::string expect_ident(const std::string& what) {
        Token t = expect(Tok::Ident, what);
        return t.text;
    }
    void expect_keyword(const std::string& kw) {
        Token t = lex_.take();
        if (t.kind != Tok::Ident || t.text != kw)
            fail(t, "expected '" + kw + "', found '" + t.text + "'");
    }
    bool peek_keyword(const std::string& kw) const {
        return lex_.peek().kind == Tok::Ident && lex_.peek().text == kw;
    }

    // -- types --
    TypePtr parse_type() { // lolli, right associative
        TypePtr left = parse_type_sum();
        if (accept(Tok::Lolli)) return t_lolli(std::move(left), parse_type());
        return left;
    }
    TypePtr parse_type_sum() {
        TypePtr t = parse_type_tensor();
        while (lex_.peek().kind == Tok::Plus) {
            lex_.take();
            t = t_sum(std::move(t), parse_type_tensor());
        }
        return t;
    }
    TypePtr parse_type_tensor() {
        TypePtr t = parse_type_with();
        while (lex_.peek().kind == Tok::Star) {
            lex_.take();
            t = t_tensor(std::move(t), parse_type_with());
        }
        return t;
    }
    TypePtr parse_type_with() {
        TypePtr t = parse_type_atom();
        while (lex_.peek().kind == Tok::Amp) {
            lex_.take();
            t = t_with(std::move(t), parse_type_atom());
        }
        return t;
    }
    TypePtr parse_type_atom() {
        Token t = lex_.take();
        if (t.kind == Tok::LParen) {
            TypePtr inner = parse_type();
            expect(Tok::RParen, "')'");
            return inner;
        }
        if (t.kind == Tok::Bang) {
            expect(Tok::LBrace, "'{' after '!'");
            ExtReal r = parse_sensitivity();
            expect(Tok::RBrace, "'}'");
            return t_bang(std::move(r), parse_type_atom());
        }
        if (t.kind == Tok::Ident) {
            if (t.text == "Real") return t_real();
            if (t.text == "Unit") return t_unit();
            if (t.text == "CeilReal") return t_ceilreal();
            if (t.text == "Db") return t_db();
            if (t.text == "O") {
                expect(Tok::LBrack, "'[' after 'O'");
                std::string fam_name = expect_ident("divergence family");
                DivFamily fam;
                if (!parse_family(fam_name, fam)) fail(t, "unknown divergence family " + fam_name);
                Grade g = Grade::unit_of(monoid_of(fam));
                if (fam == DivFamily::ED) {
                    expect(Tok::LParen, "'(' for (eps, delta) grade");
                    double eps = parse_number("eps");
                    expect(Tok::Comma, "','");
                    double delta = parse_number("delta");
                    expect(Tok::RParen, "')'");
                    g = Grade::ed(eps, delta);
                } else if (monoid_of(fam) != MonoidId::Unit) {
                    g = Grade::scalar(monoid_of(fam), parse_number("grade"));
                }
                expect(Tok::RBrack, "']'");
                return t_monad(fam, g, parse_type_atom());
            }
        }
        fail(t, "expected a type, found '" + t.text + "'");
    }
    double parse_number(const std::string& what) {
        Token t = expect(Tok::Number, what);
        return std::strtod(t.text.c_str(), nullptr);
    }
    ExtReal parse_sensitivity() {
        Token t = lex_.take();
        if (t.kind == Tok::Ident && t.text == "inf") return ExtReal::infinity();
        if (t.kind != Tok::Number) fail(t, "expected sensitivity (number, fraction or inf)");
        return ExtReal(Rational::parse(t.text));
    }

    // -- terms --
    TermPtr parse_term() {
        const Token& p = lex_.peek();
        if (p.kind == Tok::Lambda) return parse_lambda();
        if (p.kind == Tok::Ident) {
            if (p.text == "let") return parse_let();
            if (p.text == "bind") return parse_bind();
            if (p.text == "case") return parse_case();
        }
        return parse_additive();
    }
    TermPtr parse_lambda() {
        Token start = lex_.take(); // backslash
        expect(Tok::LParen, "'(' after '\\'");
        std::string x = expect_ident("parameter name");
        expect(Tok::Colon, "':' before parameter type");
        TypePtr ty = parse_type();
        expect(Tok::RParen, "')'");
        expect(Tok::Dot, "'.' after parameter");
        TermPtr body = parse_term();
        return with_pos(mk::lam(std::move(x), std::move(ty), std::move(body)), start);
    }
    TermPtr parse_let() {
        Token start = lex_.take(); // 'let'
        if (accept(Tok::Bang)) {
            std::string x = expect_ident("variable after 'let !'");
            expect(Tok::Eq, "'='");
            TermPtr e1 = parse_term();
            expect_keyword("in");
            TermPtr e2 = parse_term();
            return with_pos(mk::let_bang(std::move(x), std::move(e1), std::move(e2)), start);
        }
        if (accept(Tok::LParen)) {
            std::string x = expect_ident("first tensor variable");
            expect(Tok::Comma, "','");
            std::string y = expect_ident("second tensor variable");
            expect(Tok::RParen, "')'");
            expect(Tok::Eq, "'='");
            TermPtr e1 = parse_term();
            expect_keyword("in");
            TermPtr e2 = parse_term();
            return with_pos(
                mk::let_tensor(std::move(x), std::move(y), std::move(e1), std::move(e2)), start);
        }
        // plain let is sugar for an application of an annotated lambda
        std::string x = expect_ident("let variable");
        expect(Tok::Colon, "':' (plain let needs a type annotation)");
        TypePtr ty = parse_type();
        expect(Tok::Eq, "'='");
        TermPtr e1 = parse_term();
        expect_keyword("in");
        TermPtr e2 = parse_term();
        return with_pos(mk::app(mk::lam(std::move(x), std::move(ty), std::move(e2)),
                                std::move(e1)),
                        start);
    }
    TermPtr parse_bind() {
        Token start = lex_.take(); // 'bind'
        std::string x = expect_ident("bind variable");
        expect(Tok::BindArrow, "'<-'");
        TermPtr e1 = parse_additive();
        expect(Tok::Semi, "';'");
        TermPtr e2 = parse_term();
        return with_pos(mk::bind(std::move(x), std::move(e1), std::move(e2)), start);
    }
    TermPtr parse_case() {
        Token start = lex_.take(); // 'case'
        TermPtr scrut = parse_additive();
        expect_keyword("of");
        expect_keyword("inl");
        std::string x = expect_ident("inl binder");
        expect(Tok::Arrow, "'->'");
        TermPtr el = parse_term();
        expect(Tok::Pipe, "'|' between case branches");
        expect_keyword("inr");
        std::string y = expect_ident("inr binder");
        expect(Tok::Arrow, "'->'");
        TermPtr er = parse_term();
        return with_pos(mk::case_of(std::move(scrut), std::move(x), std::move(el), std::move(y),
                                    std::move(er)),
                        start);
    }
    TermPtr parse_additive() {
        TermPtr t = parse_application();
        while (lex_.peek().kind == Tok::Plus) {
            Token op = lex_.take();
            t = with_pos(mk::add(std::move(t), parse_application()), op);
        }
        return t;
    }
    bool starts_prefix() const {
        const Token& p = lex_.peek();
        switch (p.kind) {
            case Tok::Bang:
            case Tok::Number:
            case Tok::LParen:
            case Tok::Lt: return true;
            case Tok::Ident:
                return p.text != "in" && p.text != "of" && p.text != "let" && p.text != "bind" &&
                       p.text != "case";
            default: return false;
        }
    }
    TermPtr parse_application() {
        TermPtr t = parse_prefix();
        while (starts_prefix()) t = mk::app(std::move(t), parse_prefix());
        return t;
    }
    TermPtr parse_prefix() {
        const Token& p = lex_.peek();
        if (p.kind == Tok::Bang) {
            Token start = lex_.take();
            ExtReal r(1);
            if (accept(Tok::LBrace)) {
                r = parse_sensitivity();
                expect(Tok::RBrace, "'}'");
            }
            return with_pos(mk::bang(std::move(r), parse_prefix()), start);
        }
        if (p.kind == Tok::Ident) {
            if (p.text == "pi1" || p.text == "pi2") {
                Token start = lex_.take();
                return with_pos(mk::proj(start.text == "pi1" ? 1 : 2, parse_prefix()), start);
            }
            if (p.text == "inl" || p.text == "inr") {
                Token start = lex_.take();
                expect(Tok::LBrack, "'[' (inl/inr carry their sum type)");
                TypePtr sum = parse_type();
                expect(Tok::RBrack, "']'");
                if (sum->kind != TypeKind::Sum)
                    fail(start, "inl/inr annotation must be a sum type");
                TermPtr payload = parse_prefix();
                return with_pos(start.text == "inl" ? mk::inl(std::move(sum), std::move(payload))
                                                    : mk::inr(std::move(sum), std::move(payload)),
                                start);
            }
            if (p.text == "return") {
                Token start = lex_.take();
                expect(Tok::LBrack, "'[' (return carries its divergence family)");
                std::string fam_name = expect_ident("divergence family");
                DivFamily fam;
                if (!parse_family(fam_name, fam))
                    fail(start, "unknown divergence family " + fam_name);
                expect(Tok::RBrack, "']'");
                return with_pos(mk::ret(fam, parse_prefix()), start);
            }
        }
        return parse_atom();
    }
    std::vector<StaticArg> parse_static_args() {
        std::vector<StaticArg> args;
        if (!accept(Tok::LBrack)) return args;
        while (true) {
            const Token& p = lex_.peek();
            if (p.kind == Tok::Semi) {
                lex_.take();
                args.push_back(StaticArg::type(parse_type()));
                break;
            }
            Token t = lex_.take();
            if (t.kind == Tok::Number)
                args.push_back(StaticArg::number(t.text));
            else if (t.kind == Tok::Ident)
                args.push_back(StaticArg::ident(t.text));
            else
                fail(t, "expected a static argument");
            if (!accept(Tok::Comma)) break;
        }
        expect(Tok::RBrack, "']' after static arguments");
        return args;
    }
    TermPtr parse_atom() {
        Token t = lex_.take();
        if (t.kind == Tok::Number) {
            double v = t.text.find('/') == std::string::npos
                           ? std::strtod(t.text.c_str(), nullptr)
                           : Rational::parse(t.text).to_double();
            return with_pos(mk::real(v), t);
        }
        if (t.kind == Tok::LParen) {
            if (accept(Tok::RParen)) return with_pos(mk::unit(), t);
            TermPtr first = parse_term();
            if (accept(Tok::Comma)) {
                TermPtr second = parse_term();
                expect(Tok::RParen, "')'");
                return with_pos(mk::tensor(std::move(first), std::move(second)), t);
            }
            expect(Tok::RParen, "')'");
            return first;
        }
        if (t.kind == Tok::Lt) {
            TermPtr first = parse_term();
            expect(Tok::Comma, "','");
            TermPtr second = parse_term();
            expect(Tok::Gt, "'>'");
            return with_pos(mk::with_pair(std::move(first), std::move(second)), t);
        }
        if (t.kind == Tok::Ident) {
            if (t.text == "inf") fail(t, "'inf' is reserved");
            if (is_prim_name(t.text)) {
                auto args = lex_.peek().kind == Tok::LBrack ? parse_static_args()
                                                            : std::vector<StaticArg>{};
                return with_pos(mk::prim(t.text, std::move(args)), t);
            }
            return with_pos(mk::var(t.text), t);
        }
        fail(t, "expected a term, found '" + t.text + "'");
    }

    static TermPtr with_pos(TermPtr t, const Token& at) {
        Term copy = *t;
        copy.line = at.line;
        copy.col = at.col;
        return std::make_shared<Term>(std::move(copy));
    }

    Lexer lex_;
};

} // namespace detail

inline TermPtr parse_term(const std::string& source) {
    return detail::Parser(source).parse_term_all();
}
inline TypePtr parse_type(const std::string& source) {
    return detail::Parser(source).parse_type_all();
}

} // namespace gfuzz
