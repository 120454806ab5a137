#pragma once

#include <cctype>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "weakstrat/expr.hpp"
#include "weakstrat/fbm.hpp"
#include "weakstrat/kahan.hpp"
#include "weakstrat/stratcalc.hpp"

namespace weakstrat::seq {

// A sequence expression describes, for every grid size n, a concrete
// step-function functional of the sampled path:
//
//   const(c)        the constant c
//   fromfn(f)       t_k -> f(B(t_k))
//   circle(f, S)    t_k -> sum of (f(B_{j-1}) + f(B_j))/2 * (S_j - S_{j-1})
//   cubicvar(S)     t_k -> sum of (S_j - S_{j-1})^3
//
// plus rational linear combinations. realize() evaluates the functional on a
// path; image() maps it to its limit element.
struct SeqNode;
using SeqPtr = std::shared_ptr<const SeqNode>;

enum class SeqKind { Const, FromFunction, Circle, CubicVar, LinComb };

struct SeqNode {
    SeqKind kind;
    Rational cval;                                    // Const
    SmoothFn fn;                                      // FromFunction, Circle
    SeqPtr sub;                                       // Circle, CubicVar
    std::vector<std::pair<Rational, SeqPtr>> terms;   // LinComb
};

inline SeqPtr make_const(Rational c) {
    auto n = std::make_shared<SeqNode>();
    n->kind = SeqKind::Const;
    n->cval = std::move(c);
    return n;
}

inline SeqPtr make_from_function(SmoothFn f) {
    auto n = std::make_shared<SeqNode>();
    n->kind = SeqKind::FromFunction;
    n->fn = std::move(f);
    return n;
}

inline SeqPtr make_circle(SmoothFn f, SeqPtr s) {
    auto n = std::make_shared<SeqNode>();
    n->kind = SeqKind::Circle;
    n->fn = std::move(f);
    n->sub = std::move(s);
    return n;
}

inline SeqPtr make_cubic_var(SeqPtr s) {
    auto n = std::make_shared<SeqNode>();
    n->kind = SeqKind::CubicVar;
    n->sub = std::move(s);
    return n;
}

inline SeqPtr make_lincomb(std::vector<std::pair<Rational, SeqPtr>> terms) {
    auto n = std::make_shared<SeqNode>();
    n->kind = SeqKind::LinComb;
    n->terms = std::move(terms);
    return n;
}

// --- printing ----------------------------------------------------------------

inline std::string str(const SeqPtr& s);

namespace detail_seq {

inline std::string coeff_str(const Rational& c) {
    using boost::multiprecision::denominator;
    using boost::multiprecision::numerator;
    std::string out = numerator(c).str();
    if (denominator(c) != 1) out += "/" + denominator(c).str();
    return out;
}

inline std::string atom_str(const SeqPtr& s) {
    switch (s->kind) {
        case SeqKind::Const: return "const(" + coeff_str(s->cval) + ")";
        case SeqKind::FromFunction: return "fromfn(" + s->fn.str() + ")";
        case SeqKind::Circle: return "circle(" + s->fn.str() + ", " + str(s->sub) + ")";
        case SeqKind::CubicVar: return "cubicvar(" + str(s->sub) + ")";
        case SeqKind::LinComb: return "(" + str(s) + ")";
    }
    return "";
}

} // namespace detail_seq

inline std::string str(const SeqPtr& s) {
    if (s->kind != SeqKind::LinComb) return detail_seq::atom_str(s);
    std::string out;
    bool first = true;
    for (const auto& [c, t] : s->terms) {
        Rational a = c;
        if (first) {
            if (a < 0) {
                out += "-";
                a = -a;
            }
        } else {
            out += (a < 0) ? " - " : " + ";
            if (a < 0) a = -a;
        }
        if (a != 1) out += detail_seq::coeff_str(a) + "*";
        out += detail_seq::atom_str(t);
        first = false;
    }
    if (first) out = "const(0)";
    return out;
}

// --- limit element -------------------------------------------------------------

inline strat::Element image(const SeqPtr& s) {
    switch (s->kind) {
        case SeqKind::Const: return strat::constant_element(Scalar(s->cval));
        case SeqKind::FromFunction: return strat::from_function(s->fn);
        case SeqKind::Circle: return strat::circle(s->fn, image(s->sub));
        case SeqKind::CubicVar: return strat::cubic_variation(image(s->sub));
        case SeqKind::LinComb: {
            strat::Element acc;
            for (const auto& [c, t] : s->terms) acc = acc + c * image(t);
            return acc;
        }
    }
    return strat::Element();
}

// --- realization ----------------------------------------------------------------

struct StepFunction {
    int n = 0;
    double horizon = 0.0;
    std::vector<double> values; // values[k] at t_k = k/n

    double time(std::size_t k) const { return static_cast<double>(k) / n; }
};

inline double sup_abs_diff(const StepFunction& a, const StepFunction& b) {
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("sup_abs_diff: mismatched grids");
    double sup = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        sup = std::max(sup, std::fabs(a.values[k] - b.values[k]));
    return sup;
}

inline StepFunction realize(const SeqPtr& s, const fbm::Path& path) {
    const std::size_t m = path.values.size();
    StepFunction out;
    out.n = path.n;
    out.horizon = path.horizon;
    out.values.resize(m);
    switch (s->kind) {
        case SeqKind::Const: {
            const double c = to_double(s->cval);
            for (auto& v : out.values) v = c;
            break;
        }
        case SeqKind::FromFunction: {
            for (std::size_t k = 0; k < m; ++k) out.values[k] = s->fn(path.values[k]);
            break;
        }
        case SeqKind::Circle: {
            StepFunction inner = realize(s->sub, path);
            KahanSum acc;
            out.values[0] = 0.0;
            double prev = s->fn(path.values[0]);
            for (std::size_t k = 1; k < m; ++k) {
                const double cur = s->fn(path.values[k]);
                acc.add(0.5 * (prev + cur) * (inner.values[k] - inner.values[k - 1]));
                out.values[k] = acc.value();
                prev = cur;
            }
            break;
        }
        case SeqKind::CubicVar: {
            StepFunction inner = realize(s->sub, path);
            KahanSum acc;
            out.values[0] = 0.0;
            for (std::size_t k = 1; k < m; ++k) {
                const double d = inner.values[k] - inner.values[k - 1];
                acc.add(d * d * d);
                out.values[k] = acc.value();
            }
            break;
        }
        case SeqKind::LinComb: {
            for (auto& v : out.values) v = 0.0;
            for (const auto& [c, t] : s->terms) {
                StepFunction part = realize(t, path);
                const double cd = to_double(c);
                for (std::size_t k = 0; k < m; ++k) out.values[k] += cd * part.values[k];
            }
            break;
        }
    }
    return out;
}

// Cumulative sum of products of increments of f(B), g(B), h(B).
inline StepFunction triple_sum(const SmoothFn& f, const SmoothFn& g, const SmoothFn& h,
                               const fbm::Path& path) {
    const std::size_t m = path.values.size();
    StepFunction out;
    out.n = path.n;
    out.horizon = path.horizon;
    out.values.resize(m);
    out.values[0] = 0.0;
    KahanSum acc;
    double pf = f(path.values[0]), pg = g(path.values[0]), ph = h(path.values[0]);
    for (std::size_t k = 1; k < m; ++k) {
        const double cf = f(path.values[k]), cg = g(path.values[k]), ch = h(path.values[k]);
        acc.add((cf - pf) * (cg - pg) * (ch - ph));
        out.values[k] = acc.value();
        pf = cf;
        pg = cg;
        ph = ch;
    }
    return out;
}

// Sum over the whole grid of (dB)^p, or |dB|^p when absolute is set.
inline double power_sum(const fbm::Path& path, int p, bool absolute) {
    if (p < 1) throw std::invalid_argument("power_sum: p must be >= 1");
    KahanSum acc;
    for (std::size_t k = 1; k < path.values.size(); ++k) {
        const double d = path.values[k] - path.values[k - 1];
        double term;
        if (absolute) {
            term = std::pow(std::fabs(d), p);
        } else {
            term = 1.0;
            for (int i = 0; i < p; ++i) term *= d;
        }
        acc.add(term);
    }
    return acc.value();
}

inline void write_csv(const StepFunction& f, std::ostream& os) {
    os << "t,value\n";
    char buf[64];
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", f.time(k), f.values[k]);
        os << buf;
    }
}

// --- parser ----------------------------------------------------------------
//
//   seq    := ['-'] term (('+' | '-') term)*
//   term   := [number '*'] atom | number
//   atom   := "fromfn" '(' fn ')'
//           | "circle" '(' fn ',' seq ')'
//           | "cubicvar" '(' seq ')'
//           | "const" '(' number ')'
//           | '(' seq ')'
//   number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits] ['/' digits]
//
// fn arguments use the smooth-function grammar.
class SeqParser {
public:
    explicit SeqParser(std::string_view text) : text_(text) {}

    SeqPtr parse_all() {
        SeqPtr s = parse_seq();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return s;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!consume(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    bool starts_number() {
        const char c = peek();
        return c >= '0' && c <= '9';
    }

    Rational parse_number() {
        skip_ws();
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        };
        if (!starts_number()) throw ParseError("expected a number", pos_);
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            const std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                digits();
            else
                pos_ = mark;
        }
        std::string slice(text_.substr(start, pos_ - start));
        if (pos_ < text_.size() && text_[pos_] == '/') {
            const std::size_t mark = pos_;
            ++pos_;
            skip_ws();
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                const std::size_t dstart = pos_;
                digits();
                slice += "/" + std::string(text_.substr(dstart, pos_ - dstart));
            } else {
                pos_ = mark;
            }
        }
        SmoothFn f = SmoothFn::parse(slice);
        auto p = f.as_polynomial();
        if (!p || p->degree() > 0) throw ParseError("expected a number", start);
        return p->eval(Rational(0));
    }

    // Extract the balanced-paren slice up to a top-level ',' or the closing
    // ')' and hand it to the smooth-function parser.
    SmoothFn parse_fn_argument() {
        skip_ws();
        const std::size_t start = pos_;
        int depth = 0;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '(') ++depth;
            if (c == ')') {
                if (depth == 0) break;
                --depth;
            }
            if (c == ',' && depth == 0) break;
            ++pos_;
        }
        if (pos_ == start) throw ParseError("expected a function argument", start);
        try {
            return SmoothFn::parse(text_.substr(start, pos_ - start));
        } catch (const ParseError& e) {
            throw ParseError(e.message, start + e.position);
        }
    }

    bool consume_word(std::string_view w) {
        skip_ws();
        if (text_.substr(pos_).substr(0, w.size()) != w) return false;
        const std::size_t after = pos_ + w.size();
        if (after < text_.size() &&
            (std::isalnum(static_cast<unsigned char>(text_[after])) || text_[after] == '_'))
            return false;
        pos_ = after;
        return true;
    }

    SeqPtr parse_atom() {
        if (consume_word("fromfn")) {
            expect('(');
            SmoothFn f = parse_fn_argument();
            expect(')');
            return make_from_function(std::move(f));
        }
        if (consume_word("circle")) {
            expect('(');
            SmoothFn f = parse_fn_argument();
            expect(',');
            SeqPtr s = parse_seq();
            expect(')');
            return make_circle(std::move(f), std::move(s));
        }
        if (consume_word("cubicvar")) {
            expect('(');
            SeqPtr s = parse_seq();
            expect(')');
            return make_cubic_var(std::move(s));
        }
        if (consume_word("const")) {
            expect('(');
            bool neg = consume('-');
            Rational c = parse_number();
            if (neg) c = -c;
            expect(')');
            return make_const(std::move(c));
        }
        if (consume('(')) {
            SeqPtr s = parse_seq();
            expect(')');
            return s;
        }
        throw ParseError("expected fromfn, circle, cubicvar, const, a number, or '('", pos_);
    }

    std::pair<Rational, SeqPtr> parse_term() {
        if (starts_number()) {
            Rational c = parse_number();
            if (consume('*')) return {std::move(c), parse_atom()};
            return {Rational(1), make_const(std::move(c))};
        }
        return {Rational(1), parse_atom()};
    }

    SeqPtr parse_seq() {
        std::vector<std::pair<Rational, SeqPtr>> terms;
        bool neg = consume('-');
        auto [c, t] = parse_term();
        terms.emplace_back(neg ? -c : c, std::move(t));
        while (true) {
            if (consume('+')) {
                auto [c2, t2] = parse_term();
                terms.emplace_back(std::move(c2), std::move(t2));
            } else if (consume('-')) {
                auto [c2, t2] = parse_term();
                terms.emplace_back(-c2, std::move(t2));
            } else {
                break;
            }
        }
        if (terms.size() == 1 && terms[0].first == 1) return terms[0].second;
        return make_lincomb(std::move(terms));
    }
};

inline SeqPtr parse(std::string_view text) { return SeqParser(text).parse_all(); }

} // namespace weakstrat::seq
