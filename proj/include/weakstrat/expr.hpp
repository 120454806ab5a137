#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace weakstrat {

// Exact rational scalars. Every finite double converts exactly (doubles are
// dyadic rationals), so numeric coefficients entering from the CLI stay exact.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline Rational rational_pow(const Rational& q, int n) {
    if (n == 0) return Rational(1);
    const unsigned k = static_cast<unsigned>(n < 0 ? -static_cast<long long>(n) : n);
    Rational r(boost::multiprecision::pow(boost::multiprecision::numerator(q), k),
               boost::multiprecision::pow(boost::multiprecision::denominator(q), k));
    if (n < 0) {
        if (r == 0) throw std::domain_error("zero raised to a negative power");
        r = Rational(1) / r;
    }
    return r;
}

struct ParseError : std::runtime_error {
    std::size_t position;
    std::string message; // without the position suffix
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
          position(pos),
          message(msg) {}
};

struct NotIntegrableError : std::runtime_error {
    explicit NotIntegrableError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense polynomial with exact rational coefficients; the canonical form used
// for symbolic equality. Invariant: no trailing zero coefficients.
class Polynomial {
public:
    Polynomial() = default;
    static Polynomial constant(Rational c) {
        Polynomial p;
        if (c != 0) p.c_.push_back(std::move(c));
        return p;
    }
    static Polynomial monomial(std::size_t k, Rational c) {
        Polynomial p;
        if (c != 0) {
            p.c_.assign(k + 1, Rational(0));
            p.c_[k] = std::move(c);
        }
        return p;
    }
    static Polynomial variable() { return monomial(1, Rational(1)); }

    bool is_zero() const { return c_.empty(); }
    // degree of the zero polynomial reported as -1
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    Rational coeff(std::size_t k) const { return k < c_.size() ? c_[k] : Rational(0); }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        Polynomial r;
        r.c_.resize(std::max(a.c_.size(), b.c_.size()), Rational(0));
        for (std::size_t k = 0; k < r.c_.size(); ++k) r.c_[k] = a.coeff(k) + b.coeff(k);
        r.trim();
        return r;
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        Polynomial r;
        r.c_.resize(std::max(a.c_.size(), b.c_.size()), Rational(0));
        for (std::size_t k = 0; k < r.c_.size(); ++k) r.c_[k] = a.coeff(k) - b.coeff(k);
        r.trim();
        return r;
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        Polynomial r;
        r.c_.assign(a.c_.size() + b.c_.size() - 1, Rational(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) r.c_[i + j] += a.c_[i] * b.c_[j];
        r.trim();
        return r;
    }
    Polynomial scaled(const Rational& s) const {
        if (s == 0) return {};
        Polynomial r = *this;
        for (auto& c : r.c_) c *= s;
        return r;
    }
    Polynomial pow(unsigned n) const {
        Polynomial r = constant(Rational(1));
        Polynomial base = *this;
        while (n) {
            if (n & 1u) r = r * base;
            base = base * base;
            n >>= 1u;
        }
        return r;
    }
    Polynomial derivative() const {
        Polynomial r;
        if (c_.size() <= 1) return r;
        r.c_.resize(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) r.c_[k - 1] = c_[k] * Rational(static_cast<long>(k));
        r.trim();
        return r;
    }
    Polynomial antiderivative() const {
        Polynomial r;
        if (c_.empty()) return r;
        r.c_.assign(c_.size() + 1, Rational(0));
        for (std::size_t k = 0; k < c_.size(); ++k)
            r.c_[k + 1] = c_[k] / Rational(static_cast<long>(k + 1));
        r.trim();
        return r;
    }
    Rational eval(const Rational& x) const {
        Rational acc(0);
        for (std::size_t k = c_.size(); k-- > 0;) acc = acc * x + c_[k];
        return acc;
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }
    friend bool operator!=(const Polynomial& a, const Polynomial& b) { return !(a == b); }

    static std::string rational_str(const Rational& q) {
        std::string s = boost::multiprecision::numerator(q).str();
        if (boost::multiprecision::denominator(q) != 1)
            s += "/" + boost::multiprecision::denominator(q).str();
        return s;
    }

    // Canonical textual form: monomials in descending degree, e.g.
    // "x^3 - 1/2*x + 7". Parses back to an equivalent expression.
    std::string str() const {
        if (c_.empty()) return "0";
        std::string out;
        for (std::size_t k = c_.size(); k-- > 0;) {
            const Rational& c = c_[k];
            if (c == 0) continue;
            const bool neg = c < 0;
            const Rational mag = neg ? Rational(-c) : c;
            if (out.empty())
                out += neg ? "-" : "";
            else
                out += neg ? " - " : " + ";
            std::string piece;
            if (k == 0) {
                piece = rational_str(mag);
            } else {
                if (mag != 1) piece = rational_str(mag) + "*";
                piece += "x";
                if (k > 1) piece += "^" + std::to_string(k);
            }
            out += piece;
        }
        return out;
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0) c_.pop_back();
    }
    std::vector<Rational> c_;
};

namespace detail {

enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Kind kind;
    Rational cval;       // Constant
    double cdbl = 0.0;   // cached double of cval
    int expo = 0;        // Pow
    NodePtr a, b;        // children (unary nodes use a)
};

inline NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr kconst(Rational q) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->cdbl = to_double(q);
    n->cval = std::move(q);
    return n;
}

inline NodePtr variable() { return make(Kind::Variable); }

inline bool is_const(const NodePtr& n) { return n->kind == Kind::Constant; }
inline bool is_const_val(const NodePtr& n, int v) {
    return n->kind == Kind::Constant && n->cval == v;
}

inline NodePtr add(NodePtr a, NodePtr b) {
    if (is_const_val(a, 0)) return b;
    if (is_const_val(b, 0)) return a;
    if (is_const(a) && is_const(b)) return kconst(a->cval + b->cval);
    return make(Kind::Add, std::move(a), std::move(b));
}

inline NodePtr mul(NodePtr a, NodePtr b);

inline NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const_val(b, 0)) return a;
    if (is_const(a) && is_const(b)) return kconst(a->cval - b->cval);
    if (is_const_val(a, 0)) return mul(kconst(Rational(-1)), std::move(b));
    return make(Kind::Sub, std::move(a), std::move(b));
}

inline NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(b) && !is_const(a)) std::swap(a, b);
    if (is_const(a)) {
        if (a->cval == 0) return kconst(Rational(0));
        if (a->cval == 1) return b;
        if (is_const(b)) return kconst(a->cval * b->cval);
    }
    return make(Kind::Mul, std::move(a), std::move(b));
}

inline NodePtr divn(NodePtr a, NodePtr b) {
    if (is_const_val(b, 1)) return a;
    if (is_const(a) && is_const(b) && b->cval != 0) return kconst(a->cval / b->cval);
    return make(Kind::Div, std::move(a), std::move(b));
}

inline NodePtr powi(NodePtr a, int n) {
    if (n == 0) return kconst(Rational(1));
    if (n == 1) return a;
    if (is_const(a) && !(a->cval == 0 && n < 0)) return kconst(rational_pow(a->cval, n));
    auto node = std::make_shared<Node>();
    node->kind = Kind::Pow;
    node->a = std::move(a);
    node->expo = n;
    return node;
}

inline NodePtr sin_node(NodePtr a) {
    if (is_const_val(a, 0)) return kconst(Rational(0));
    return make(Kind::Sin, std::move(a));
}
inline NodePtr cos_node(NodePtr a) {
    if (is_const_val(a, 0)) return kconst(Rational(1));
    return make(Kind::Cos, std::move(a));
}
inline NodePtr exp_node(NodePtr a) {
    if (is_const_val(a, 0)) return kconst(Rational(1));
    return make(Kind::Exp, std::move(a));
}

// ---- printing -------------------------------------------------------------

inline bool negative_leading(const NodePtr& n) {
    const Node* p = n.get();
    while (p->kind == Kind::Mul || p->kind == Kind::Div) p = p->a.get();
    return p->kind == Kind::Constant && p->cval < 0;
}

// Precedence as the parser sees it: 1 additive, 2 multiplicative, 3 power,
// 4 atom. Fractions print as "p/q" so they rank multiplicative; anything with
// a leading minus ranks additive so operand positions parenthesize it.
inline int print_prec(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul:
        case Kind::Div: return negative_leading(n) ? 1 : 2;
        case Kind::Pow: return 3;
        case Kind::Constant:
            if (n->cval < 0) return 1;
            return boost::multiprecision::denominator(n->cval) == 1 ? 4 : 2;
        default: return 4;
    }
}

inline std::string print_node(const NodePtr& n);

inline std::string print_operand(const NodePtr& n, int min_prec) {
    std::string s = print_node(n);
    if (print_prec(n) < min_prec) return "(" + s + ")";
    return s;
}

// Rebuilds b with its sign flipped when that yields a cleaner "a - b" form;
// returns nullptr when b does not start with a negative constant.
inline NodePtr flip_negation(const NodePtr& n) {
    if (n->kind == Kind::Constant && n->cval < 0) return kconst(Rational(-n->cval));
    if (n->kind == Kind::Mul && is_const(n->a) && n->a->cval < 0) {
        if (n->a->cval == -1) return n->b;
        return mul(kconst(Rational(-n->a->cval)), n->b);
    }
    return nullptr;
}

inline std::string print_node(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Constant: {
            std::string s = boost::multiprecision::numerator(n->cval).str();
            if (boost::multiprecision::denominator(n->cval) != 1)
                s += "/" + boost::multiprecision::denominator(n->cval).str();
            return s;
        }
        case Kind::Variable: return "x";
        case Kind::Add: {
            if (NodePtr flipped = flip_negation(n->b))
                return print_operand(n->a, 1) + " - " + print_operand(flipped, 2);
            return print_operand(n->a, 1) + " + " + print_operand(n->b, 2);
        }
        case Kind::Sub: {
            if (NodePtr flipped = flip_negation(n->b))
                return print_operand(n->a, 1) + " + " + print_operand(flipped, 2);
            return print_operand(n->a, 1) + " - " + print_operand(n->b, 2);
        }
        case Kind::Mul: {
            if (is_const(n->a) && n->a->cval < 0) {
                if (n->a->cval == -1) return "-" + print_operand(n->b, 2);
                return "-" + print_node(mul(kconst(Rational(-n->a->cval)), n->b));
            }
            return print_operand(n->a, 2) + "*" + print_operand(n->b, 2);
        }
        case Kind::Div: return print_operand(n->a, 2) + "/" + print_operand(n->b, 3);
        case Kind::Pow: return print_operand(n->a, 4) + "^" + std::to_string(n->expo);
        case Kind::Sin: return "sin(" + print_node(n->a) + ")";
        case Kind::Cos: return "cos(" + print_node(n->a) + ")";
        case Kind::Exp: return "exp(" + print_node(n->a) + ")";
    }
    return "";
}

// ---- parsing ---------------------------------------------------------------
//
//   expr   := ['-'] term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' ['-'] digits)?
//   base   := number | 'x' | ("sin"|"cos"|"exp") '(' expr ')' | '(' expr ')'
//
// Numbers are unsigned decimal literals (optional fraction and exponent) and
// parse to exact rationals.

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    // Parses a full expression and requires the whole input to be consumed.
    NodePtr parse_all() {
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

    // Parses the longest valid expression from pos; used when an expression is
    // embedded in a larger grammar (stops before e.g. ',' or ')').
    NodePtr parse_expr() {
        skip_ws();
        NodePtr e;
        if (match('-'))
            e = mul(kconst(Rational(-1)), parse_term());
        else
            e = parse_term();
        for (;;) {
            skip_ws();
            if (match('+'))
                e = add(e, parse_term());
            else if (match('-'))
                e = sub(e, parse_term());
            else
                return e;
        }
    }

    std::size_t pos() const { return pos_; }

private:
    NodePtr parse_term() {
        NodePtr e = parse_factor();
        for (;;) {
            skip_ws();
            if (match('*'))
                e = mul(e, parse_factor());
            else if (match('/'))
                e = divn(e, parse_factor());
            else
                return e;
        }
    }

    NodePtr parse_factor() {
        NodePtr base = parse_base();
        skip_ws();
        if (match('^')) {
            skip_ws();
            const bool neg = match('-');
            skip_ws();
            if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
                throw ParseError("expected integer exponent", pos_);
            long v = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                v = v * 10 + (s_[pos_] - '0');
                if (v > 64) throw ParseError("exponent too large", pos_);
                ++pos_;
            }
            return powi(base, static_cast<int>(neg ? -v : v));
        }
        return base;
    }

    NodePtr parse_base() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            skip_ws();
            if (!match(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string_view name = s_.substr(start, pos_ - start);
            if (name == "x") return variable();
            if (name == "sin" || name == "cos" || name == "exp") {
                skip_ws();
                if (!match('(')) throw ParseError("expected '(' after function name", pos_);
                NodePtr arg = parse_expr();
                skip_ws();
                if (!match(')')) throw ParseError("expected ')'", pos_);
                if (name == "sin") return sin_node(arg);
                if (name == "cos") return cos_node(arg);
                return exp_node(arg);
            }
            throw ParseError("unknown identifier '" + std::string(name) + "'", start);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        BigInt digits = 0;
        long frac_digits = 0;
        long exp10 = 0;
        bool any = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            digits = digits * 10 + (s_[pos_] - '0');
            any = true;
            ++pos_;
        }
        if (!any) throw ParseError("expected number", pos_);
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                digits = digits * 10 + (s_[pos_] - '0');
                ++frac_digits;
                ++pos_;
            }
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            const std::size_t mark = pos_;
            ++pos_;
            bool neg = false;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
                neg = s_[pos_] == '-';
                ++pos_;
            }
            if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                pos_ = mark; // not an exponent after all (e.g. "2*exp(x)")
            } else {
                long e = 0;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                    e = e * 10 + (s_[pos_] - '0');
                    if (e > 4096) throw ParseError("exponent out of range", pos_);
                    ++pos_;
                }
                exp10 = neg ? -e : e;
            }
        }
        Rational q(digits);
        const long net = exp10 - frac_digits;
        if (net > 0)
            q *= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(net)));
        else if (net < 0)
            q /= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-net)));
        return kconst(std::move(q));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool match(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

// ---- calculus and evaluation ------------------------------------------------

inline NodePtr derivative(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Constant: return kconst(Rational(0));
        case Kind::Variable: return kconst(Rational(1));
        case Kind::Add: return add(derivative(n->a), derivative(n->b));
        case Kind::Sub: return sub(derivative(n->a), derivative(n->b));
        case Kind::Mul: return add(mul(derivative(n->a), n->b), mul(n->a, derivative(n->b)));
        case Kind::Div:
            return divn(sub(mul(derivative(n->a), n->b), mul(n->a, derivative(n->b))),
                        powi(n->b, 2));
        case Kind::Pow:
            return mul(mul(kconst(Rational(n->expo)), powi(n->a, n->expo - 1)), derivative(n->a));
        case Kind::Sin: return mul(cos_node(n->a), derivative(n->a));
        case Kind::Cos: return mul(mul(kconst(Rational(-1)), sin_node(n->a)), derivative(n->a));
        case Kind::Exp: return mul(exp_node(n->a), derivative(n->a));
    }
    return kconst(Rational(0));
}

inline double eval_pow(double v, int n) {
    if (n < 0) {
        if (v == 0.0) throw std::domain_error("zero raised to a negative power");
        v = 1.0 / v;
        n = -n;
    }
    double r = 1.0, base = v;
    unsigned k = static_cast<unsigned>(n);
    while (k) {
        if (k & 1u) r *= base;
        base *= base;
        k >>= 1u;
    }
    return r;
}

inline double evaluate(const NodePtr& n, double x) {
    switch (n->kind) {
        case Kind::Constant: return n->cdbl;
        case Kind::Variable: return x;
        case Kind::Add: return evaluate(n->a, x) + evaluate(n->b, x);
        case Kind::Sub: return evaluate(n->a, x) - evaluate(n->b, x);
        case Kind::Mul: return evaluate(n->a, x) * evaluate(n->b, x);
        case Kind::Div: {
            const double den = evaluate(n->b, x);
            if (den == 0.0) throw std::domain_error("division by zero");
            return evaluate(n->a, x) / den;
        }
        case Kind::Pow: return eval_pow(evaluate(n->a, x), n->expo);
        case Kind::Sin: return std::sin(evaluate(n->a, x));
        case Kind::Cos: return std::cos(evaluate(n->a, x));
        case Kind::Exp: return std::exp(evaluate(n->a, x));
    }
    return 0.0;
}

inline NodePtr substitute(const NodePtr& n, const NodePtr& replacement) {
    switch (n->kind) {
        case Kind::Constant: return n;
        case Kind::Variable: return replacement;
        case Kind::Add: return add(substitute(n->a, replacement), substitute(n->b, replacement));
        case Kind::Sub: return sub(substitute(n->a, replacement), substitute(n->b, replacement));
        case Kind::Mul: return mul(substitute(n->a, replacement), substitute(n->b, replacement));
        case Kind::Div: return divn(substitute(n->a, replacement), substitute(n->b, replacement));
        case Kind::Pow: return powi(substitute(n->a, replacement), n->expo);
        case Kind::Sin: return sin_node(substitute(n->a, replacement));
        case Kind::Cos: return cos_node(substitute(n->a, replacement));
        case Kind::Exp: return exp_node(substitute(n->a, replacement));
    }
    return n;
}

inline std::optional<Polynomial> to_polynomial(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Constant: return Polynomial::constant(n->cval);
        case Kind::Variable: return Polynomial::variable();
        case Kind::Add: {
            auto a = to_polynomial(n->a), b = to_polynomial(n->b);
            if (a && b) return *a + *b;
            return std::nullopt;
        }
        case Kind::Sub: {
            auto a = to_polynomial(n->a), b = to_polynomial(n->b);
            if (a && b) return *a - *b;
            return std::nullopt;
        }
        case Kind::Mul: {
            auto a = to_polynomial(n->a), b = to_polynomial(n->b);
            if (a && b) return *a * *b;
            return std::nullopt;
        }
        case Kind::Div: {
            auto a = to_polynomial(n->a), b = to_polynomial(n->b);
            if (a && b && b->degree() == 0) return a->scaled(Rational(1) / b->coeff(0));
            return std::nullopt;
        }
        case Kind::Pow: {
            auto a = to_polynomial(n->a);
            if (!a) return std::nullopt;
            if (n->expo >= 0) return a->pow(static_cast<unsigned>(n->expo));
            if (a->degree() == 0 && a->coeff(0) != 0)
                return Polynomial::constant(rational_pow(a->coeff(0), n->expo));
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

inline NodePtr from_polynomial(const Polynomial& p) {
    if (p.is_zero()) return kconst(Rational(0));
    NodePtr acc = nullptr;
    for (int k = p.degree(); k >= 0; --k) {
        const Rational c = p.coeff(static_cast<std::size_t>(k));
        if (c == 0) continue;
        NodePtr term = mul(kconst(c), powi(variable(), k));
        acc = acc ? add(acc, term) : term;
    }
    return acc;
}

} // namespace detail

// Smooth univariate function represented as an immutable expression tree over
// the grammar {rationals, x, + - * /, integer powers, sin, cos, exp}.
class SmoothFn {
public:
    SmoothFn() : root_(detail::kconst(Rational(0))) {}
    explicit SmoothFn(detail::NodePtr n) : root_(std::move(n)) {}

    static SmoothFn variable() { return SmoothFn(detail::variable()); }
    static SmoothFn constant(Rational q) { return SmoothFn(detail::kconst(std::move(q))); }
    static SmoothFn constant(long v) { return constant(Rational(v)); }
    static SmoothFn from_polynomial(const Polynomial& p) {
        return SmoothFn(detail::from_polynomial(p));
    }

    static SmoothFn parse(std::string_view text) {
        detail::Parser p(text);
        return SmoothFn(p.parse_all());
    }

    std::string str() const { return detail::print_node(root_); }

    // Canonical text when the function is a polynomial, raw tree otherwise.
    std::string canonical_str() const {
        if (auto p = as_polynomial()) return p->str();
        return str();
    }

    SmoothFn derivative(int order = 1) const {
        if (order < 0) throw std::invalid_argument("derivative order must be >= 0");
        detail::NodePtr n = root_;
        for (int i = 0; i < order; ++i) n = detail::derivative(n);
        return SmoothFn(n);
    }

    SmoothFn antiderivative() const; // defined below

    double operator()(double x) const { return detail::evaluate(root_, x); }

    // this(inner(x))
    SmoothFn compose(const SmoothFn& inner) const {
        return SmoothFn(detail::substitute(root_, inner.root_));
    }

    std::optional<Polynomial> as_polynomial() const { return detail::to_polynomial(root_); }
    bool is_polynomial() const { return as_polynomial().has_value(); }
    bool is_zero() const {
        auto p = as_polynomial();
        return p && p->is_zero();
    }

    const detail::NodePtr& node() const { return root_; }

    friend SmoothFn operator+(const SmoothFn& a, const SmoothFn& b) {
        return SmoothFn(detail::add(a.root_, b.root_));
    }
    friend SmoothFn operator-(const SmoothFn& a, const SmoothFn& b) {
        return SmoothFn(detail::sub(a.root_, b.root_));
    }
    friend SmoothFn operator*(const SmoothFn& a, const SmoothFn& b) {
        return SmoothFn(detail::mul(a.root_, b.root_));
    }
    friend SmoothFn operator/(const SmoothFn& a, const SmoothFn& b) {
        return SmoothFn(detail::divn(a.root_, b.root_));
    }
    SmoothFn pow(int n) const { return SmoothFn(detail::powi(root_, n)); }

    static SmoothFn sin(const SmoothFn& f) { return SmoothFn(detail::sin_node(f.root_)); }
    static SmoothFn cos(const SmoothFn& f) { return SmoothFn(detail::cos_node(f.root_)); }
    static SmoothFn exp(const SmoothFn& f) { return SmoothFn(detail::exp_node(f.root_)); }

private:
    detail::NodePtr root_;
};

inline SmoothFn differentiate(const SmoothFn& f, int order = 1) { return f.derivative(order); }

// Algebraic equality: exact comparison of canonical polynomial forms when both
// sides canonicalize; otherwise agreement at 64 evenly spaced points on
// [-2, 2] within |f-g| <= 1e-9 * max(1, |f|, |g|). A point where exactly one
// side fails to evaluate counts as disagreement; where both fail it is skipped.
inline bool equal(const SmoothFn& f, const SmoothFn& g) {
    auto pf = f.as_polynomial();
    auto pg = g.as_polynomial();
    if (pf && pg) return *pf == *pg;
    constexpr int kPoints = 64;
    constexpr double kTol = 1e-9;
    for (int i = 0; i < kPoints; ++i) {
        const double x = -2.0 + 4.0 * static_cast<double>(i) / (kPoints - 1);
        double a, b;
        bool fa = true, fb = true;
        try {
            a = f(x);
        } catch (const std::domain_error&) {
            fa = false;
        }
        try {
            b = g(x);
        } catch (const std::domain_error&) {
            fb = false;
        }
        if (fa != fb) return false;
        if (!fa) continue;
        const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
        if (std::fabs(a - b) > kTol * scale) return false;
    }
    return true;
}

namespace detail {

inline bool is_transcendental(const NodePtr& n) {
    return n->kind == Kind::Sin || n->kind == Kind::Cos || n->kind == Kind::Exp;
}

inline void flatten_product(const NodePtr& n, std::vector<NodePtr>& out) {
    if (n->kind == Kind::Mul) {
        flatten_product(n->a, out);
        flatten_product(n->b, out);
    } else {
        out.push_back(n);
    }
}

// integral of p(x) * sin(a x + b) resp. cos(a x + b), by parts on deg p
inline NodePtr integrate_poly_trig(const Polynomial& p, const NodePtr& arg, const Rational& a,
                                   bool is_sin) {
    if (p.is_zero()) return kconst(Rational(0));
    const Rational inv_a = Rational(1) / a;
    if (is_sin) {
        // -p cos(u)/a + (1/a) * integral(p' cos(u))
        NodePtr head = mul(kconst(-inv_a), mul(from_polynomial(p), cos_node(arg)));
        NodePtr tail = integrate_poly_trig(p.derivative(), arg, a, false);
        return add(head, mul(kconst(inv_a), tail));
    }
    // p sin(u)/a - (1/a) * integral(p' sin(u))
    NodePtr head = mul(kconst(inv_a), mul(from_polynomial(p), sin_node(arg)));
    NodePtr tail = integrate_poly_trig(p.derivative(), arg, a, true);
    return sub(head, mul(kconst(inv_a), tail));
}

// integral of p(x) * exp(a x + b): exp(u) * sum_k (-1)^k p^(k) / a^(k+1)
inline NodePtr integrate_poly_exp(const Polynomial& p, const NodePtr& arg, const Rational& a) {
    Polynomial q;
    Polynomial pk = p;
    Rational coef = Rational(1) / a;
    int sign = 1;
    while (!pk.is_zero()) {
        q = q + pk.scaled(sign > 0 ? coef : Rational(-coef));
        pk = pk.derivative();
        coef /= a;
        sign = -sign;
    }
    return mul(from_polynomial(q), exp_node(arg));
}

inline NodePtr antiderivative_node(const NodePtr& n);

// Product of polynomial factors with at most one sin/cos/exp of a linear
// argument; constant-valued transcendental factors pass through as scalars.
inline NodePtr antiderivative_product(const std::vector<NodePtr>& factors, const NodePtr& whole) {
    Polynomial p = Polynomial::constant(Rational(1));
    NodePtr scalar; // product of constant-valued non-rational factors
    NodePtr trans;  // the single transcendental factor with linear argument
    Rational slope;
    for (const NodePtr& f : factors) {
        if (auto poly = to_polynomial(f)) {
            p = p * *poly;
            continue;
        }
        if (is_transcendental(f)) {
            auto arg_poly = to_polynomial(f->a);
            if (arg_poly && arg_poly->degree() <= 0) {
                scalar = scalar ? mul(scalar, f) : f;
                continue;
            }
            if (arg_poly && arg_poly->degree() == 1 && !trans) {
                trans = f;
                slope = arg_poly->coeff(1);
                continue;
            }
        }
        throw NotIntegrableError("no symbolic antiderivative for: " + print_node(whole));
    }
    NodePtr result;
    if (!trans) {
        result = from_polynomial(p.antiderivative());
    } else if (trans->kind == Kind::Exp) {
        result = integrate_poly_exp(p, trans->a, slope);
    } else {
        result = integrate_poly_trig(p, trans->a, slope, trans->kind == Kind::Sin);
    }
    return scalar ? mul(scalar, result) : result;
}

inline NodePtr antiderivative_node(const NodePtr& n) {
    if (auto poly = to_polynomial(n)) return from_polynomial(poly->antiderivative());
    switch (n->kind) {
        case Kind::Add: return add(antiderivative_node(n->a), antiderivative_node(n->b));
        case Kind::Sub: return sub(antiderivative_node(n->a), antiderivative_node(n->b));
        case Kind::Div:
            if (is_const(n->b) && n->b->cval != 0)
                return divn(antiderivative_node(n->a), n->b);
            throw NotIntegrableError("no symbolic antiderivative for: " + print_node(n));
        case Kind::Mul: {
            std::vector<NodePtr> factors;
            flatten_product(n, factors);
            return antiderivative_product(factors, n);
        }
        case Kind::Sin:
        case Kind::Cos:
        case Kind::Exp:
            return antiderivative_product({n}, n);
        default:
            throw NotIntegrableError("no symbolic antiderivative for: " + print_node(n));
    }
}

} // namespace detail

inline SmoothFn SmoothFn::antiderivative() const {
    return SmoothFn(detail::antiderivative_node(root_));
}

// Real scalar that stays an exact rational whenever it was produced by exact
// operations; falls back to double once a transcendental is evaluated at a
// nonzero point. Exactness is what lets the symbolic identity checkers compare
// initial values without floating-point ambiguity.
class Scalar {
public:
    Scalar() : exact_(true), q_(0), d_(0.0) {}
    Scalar(Rational q) : exact_(true), d_(weakstrat::to_double(q)), q_(std::move(q)) {}
    Scalar(long v) : Scalar(Rational(v)) {}
    static Scalar inexact(double d) {
        Scalar s;
        s.exact_ = false;
        s.d_ = d;
        s.q_ = 0;
        return s;
    }

    bool is_exact() const { return exact_; }
    double to_double() const { return exact_ ? weakstrat::to_double(q_) : d_; }
    const Rational& rational() const {
        if (!exact_) throw std::logic_error("scalar is not exact");
        return q_;
    }

    friend Scalar operator+(const Scalar& a, const Scalar& b) {
        if (a.exact_ && b.exact_) return Scalar(a.q_ + b.q_);
        return inexact(a.to_double() + b.to_double());
    }
    friend Scalar operator-(const Scalar& a, const Scalar& b) {
        if (a.exact_ && b.exact_) return Scalar(a.q_ - b.q_);
        return inexact(a.to_double() - b.to_double());
    }
    friend Scalar operator*(const Scalar& a, const Scalar& b) {
        if (a.exact_ && b.exact_) return Scalar(a.q_ * b.q_);
        return inexact(a.to_double() * b.to_double());
    }
    friend bool operator==(const Scalar& a, const Scalar& b) {
        if (a.exact_ && b.exact_) return a.q_ == b.q_;
        return a.to_double() == b.to_double();
    }
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

private:
    bool exact_;
    double d_;
    Rational q_;
};

namespace detail {

inline Scalar exact_eval_at_zero(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Constant: return Scalar(n->cval);
        case Kind::Variable: return Scalar(Rational(0));
        case Kind::Add: return exact_eval_at_zero(n->a) + exact_eval_at_zero(n->b);
        case Kind::Sub: return exact_eval_at_zero(n->a) - exact_eval_at_zero(n->b);
        case Kind::Mul: return exact_eval_at_zero(n->a) * exact_eval_at_zero(n->b);
        case Kind::Div: {
            Scalar num = exact_eval_at_zero(n->a), den = exact_eval_at_zero(n->b);
            if (den.is_exact()) {
                if (den.rational() == 0) throw std::domain_error("division by zero");
                if (num.is_exact()) return Scalar(num.rational() / den.rational());
            }
            if (den.to_double() == 0.0) throw std::domain_error("division by zero");
            return Scalar::inexact(num.to_double() / den.to_double());
        }
        case Kind::Pow: {
            Scalar base = exact_eval_at_zero(n->a);
            if (base.is_exact()) {
                if (base.rational() == 0 && n->expo < 0)
                    throw std::domain_error("zero raised to a negative power");
                return Scalar(rational_pow(base.rational(), n->expo));
            }
            return Scalar::inexact(eval_pow(base.to_double(), n->expo));
        }
        case Kind::Sin: {
            Scalar a = exact_eval_at_zero(n->a);
            if (a.is_exact() && a.rational() == 0) return Scalar(Rational(0));
            return Scalar::inexact(std::sin(a.to_double()));
        }
        case Kind::Cos: {
            Scalar a = exact_eval_at_zero(n->a);
            if (a.is_exact() && a.rational() == 0) return Scalar(Rational(1));
            return Scalar::inexact(std::cos(a.to_double()));
        }
        case Kind::Exp: {
            Scalar a = exact_eval_at_zero(n->a);
            if (a.is_exact() && a.rational() == 0) return Scalar(Rational(1));
            return Scalar::inexact(std::exp(a.to_double()));
        }
    }
    return Scalar(Rational(0));
}

} // namespace detail

// f(0), exact whenever no transcendental is evaluated at a nonzero point.
inline Scalar value_at_zero(const SmoothFn& f) { return detail::exact_eval_at_zero(f.node()); }

// Deterministic random polynomial with small rational coefficients. Uses plain
// modulo reduction of mt19937_64 outputs so results are identical across
// platforms (std::uniform_int_distribution is implementation-defined).
inline SmoothFn random_polynomial(std::mt19937_64& gen, int max_degree) {
    auto below = [&gen](std::uint64_t n) { return static_cast<long>(gen() % n); };
    const int deg = static_cast<int>(below(static_cast<std::uint64_t>(max_degree) + 1));
    static constexpr long kDenoms[] = {1, 1, 1, 2, 2, 3, 4, 6, 12};
    Polynomial p;
    for (int k = 0; k <= deg; ++k) {
        long num = below(13) - 6; // [-6, 6]
        if (k == deg && num == 0) num = 1 + below(6);
        if (num == 0) continue;
        const long den = kDenoms[below(sizeof(kDenoms) / sizeof(kDenoms[0]))];
        p = p + Polynomial::monomial(static_cast<std::size_t>(k), Rational(num, den));
    }
    return SmoothFn::from_polynomial(p);
}

} // namespace weakstrat
