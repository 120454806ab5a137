#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "weakstrat/expr.hpp"
#include "weakstrat/kahan.hpp"

namespace weakstrat::strat {

// An element encodes the limit, along the uniform grids, of a sequence of
// symmetric-sum functionals of the path B. It is determined by a starting
// value eta and two integrand functions:
//
//   eta  +  (first-order part with integrand phi1)  +  (third-order part with
//   integrand phi3, paired with the signed cubic variation).
//
// Elements form a vector space; the operations below close over it.
struct Element {
    Scalar eta;
    SmoothFn phi1;
    SmoothFn phi3;

    Element() = default;
    Element(Scalar e, SmoothFn p1, SmoothFn p3)
        : eta(std::move(e)), phi1(std::move(p1)), phi3(std::move(p3)) {}
};

inline Element zero_element() { return Element(); }

inline Element constant_element(Scalar c) { return Element(std::move(c), SmoothFn(), SmoothFn()); }

inline Element operator+(const Element& a, const Element& b) {
    return Element(a.eta + b.eta, a.phi1 + b.phi1, a.phi3 + b.phi3);
}

inline Element operator-(const Element& a, const Element& b) {
    return Element(a.eta - b.eta, a.phi1 - b.phi1, a.phi3 - b.phi3);
}

inline Element operator*(const Rational& c, const Element& e) {
    SmoothFn k = SmoothFn::constant(c);
    return Element(Scalar(c) * e.eta, k * e.phi1, k * e.phi3);
}

inline Element operator-(const Element& e) { return Rational(-1) * e; }

inline bool scalar_close(const Scalar& a, const Scalar& b) {
    if (a.is_exact() && b.is_exact()) return a.rational() == b.rational();
    const double x = a.to_double(), y = b.to_double();
    const double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
    return std::fabs(x - y) <= 1e-9 * scale;
}

inline bool operator==(const Element& a, const Element& b) {
    return scalar_close(a.eta, b.eta) && equal(a.phi1, b.phi1) && equal(a.phi3, b.phi3);
}
inline bool operator!=(const Element& a, const Element& b) { return !(a == b); }

// Exact rational carrying the same value as the scalar (doubles convert
// exactly, they are binary fractions).
inline Rational exact_rational(const Scalar& s) {
    if (s.is_exact()) return s.rational();
    return Rational(s.to_double());
}

// --- constructors of elements ---------------------------------------------

// The element of the constant-in-time sequence f(B(t_j)). Its first-order
// integrand is f' and its third-order integrand is f'''/24.
inline Element from_function(const SmoothFn& f) {
    return Element(value_at_zero(f), f.derivative(),
                   SmoothFn::constant(Rational(1, 24)) * f.derivative(3));
}

// Symmetric integral of f(B) against the sequence with element N. Only the
// increments of N matter, so N.eta does not appear.
inline Element circle(const SmoothFn& f, const Element& n) {
    SmoothFn third = SmoothFn::constant(Rational(1, 8)) * f.derivative(2) * n.phi1 + f * n.phi3;
    return Element(Scalar(Rational(0)), f * n.phi1, std::move(third));
}

// Signed cubic variation of the sequence with element N: the sum of cubed
// increments keeps only the first-order integrand, cubed.
inline Element cubic_variation(const Element& n) {
    return Element(Scalar(Rational(0)), SmoothFn(), n.phi1.pow(3));
}

// Integral of f(B) against the signed cubic variation of g(B).
inline Element integral_against_cubic(const SmoothFn& f, const SmoothFn& g) {
    return Element(Scalar(Rational(0)), SmoothFn(), f * g.derivative().pow(3));
}

// Limit of the symmetrized triple covariation of f(B), g(B), h(B).
inline Element triple_covariation(const SmoothFn& f, const SmoothFn& g, const SmoothFn& h) {
    return Element(Scalar(Rational(0)), SmoothFn(),
                   f.derivative() * g.derivative() * h.derivative());
}

// --- limit law -------------------------------------------------------------

// Every element's sequence converges in law to
//
//   eta + big_phi(B(t)) + kappa * int_0^t psi(B(s)) dW(s),
//
// with W a Brownian motion independent of B. big_phi is the antiderivative of
// phi1 vanishing at 0 and psi folds the curvature correction into phi3.
struct LimitDescriptor {
    Scalar eta;
    SmoothFn big_phi;
    SmoothFn psi;
};

inline LimitDescriptor limit_descriptor(const Element& e) {
    SmoothFn g = e.phi1.antiderivative();
    Scalar g0 = value_at_zero(g);
    if (!(g0.is_exact() && g0.rational() == 0)) g = g - SmoothFn::constant(exact_rational(g0));
    SmoothFn psi = e.phi3 - SmoothFn::constant(Rational(1, 24)) * e.phi1.derivative(2);
    return LimitDescriptor{e.eta, std::move(g), std::move(psi)};
}

inline Element recompose(const LimitDescriptor& d) {
    return Element(d.eta, d.big_phi.derivative(),
                   d.psi + SmoothFn::constant(Rational(1, 24)) * d.big_phi.derivative(3));
}

// kappa^2 = (3/4) * sum over integer lags r of
//           (|r+1|^(1/3) + |r-1|^(1/3) - 2|r|^(1/3))^3.
// The r = 0 term is 6; the rest are negative and decay like r^-5, so the
// truncated sums decrease monotonically and the tail beyond max_lag is
// O(max_lag^-4).
inline double kappa_squared(long max_lag = 10000) {
    if (max_lag < 0) throw std::invalid_argument("kappa_squared: negative lag cutoff");
    KahanSum acc;
    acc.add(6.0);
    for (long r = 1; r <= max_lag; ++r) {
        const double d =
            std::cbrt(static_cast<double>(r + 1)) + std::cbrt(static_cast<double>(r - 1)) -
            2.0 * std::cbrt(static_cast<double>(r));
        acc.add(1.5 * d * d * d);
    }
    return acc.value();
}

inline double kappa(long max_lag = 10000) { return std::sqrt(kappa_squared(max_lag)); }

// --- identity checkers ------------------------------------------------------

struct IdentityCheck {
    bool ok = false;
    Element lhs, rhs;
};

// Change of variable for the symmetric integral: with g the normalized
// antiderivative of N.phi1 and theta = N.phi3 - N.phi1''/24,
//
//   circle(f, N) = from_function(F)                    where F' = f * g',
//                + integral_against_cubic((f''g' - f'g'')/12, x)
//                + integral_against_cubic(f * theta, x).
//
// Both sides are assembled through independent code paths and compared as
// elements. Requires f * g' to have a closed-form antiderivative.
inline IdentityCheck check_change_of_variable(const SmoothFn& f, const Element& n) {
    IdentityCheck out;
    out.lhs = circle(f, n);

    LimitDescriptor d = limit_descriptor(n);
    const SmoothFn& g = d.big_phi;
    SmoothFn cap_f = (f * g.derivative()).antiderivative();
    Scalar f0 = value_at_zero(cap_f);
    if (!(f0.is_exact() && f0.rational() == 0))
        cap_f = cap_f - SmoothFn::constant(exact_rational(f0));

    SmoothFn id = SmoothFn::variable();
    SmoothFn mixed = SmoothFn::constant(Rational(1, 12)) *
                     (f.derivative(2) * g.derivative() - f.derivative() * g.derivative(2));
    out.rhs = from_function(cap_f) + integral_against_cubic(mixed, id) +
              integral_against_cubic(f * d.psi, id);
    out.ok = (out.lhs == out.rhs);
    return out;
}

// Change of variable in the other direction: for smooth phi and g,
//
//   from_function(phi o g) = phi(g(0))
//                          + circle(phi' o g, from_function(g))
//                          - (1/12) * integral_against_cubic(phi''' o g, g).
inline IdentityCheck check_ito_formula(const SmoothFn& phi, const SmoothFn& g) {
    IdentityCheck out;
    out.lhs = from_function(phi.compose(g));

    Scalar g0 = value_at_zero(g);
    Scalar c = g0.is_exact() ? value_at_zero(phi.compose(SmoothFn::constant(g0.rational())))
                             : Scalar::inexact(phi(g0.to_double()));
    out.rhs = constant_element(c) + circle(phi.derivative().compose(g), from_function(g)) -
              Rational(1, 12) * integral_against_cubic(phi.derivative(3).compose(g), g);
    out.ok = (out.lhs == out.rhs);
    return out;
}

// Substitution: integrating h(B) against the sequence circle(f, N) equals
// integrating (f*h)(B) against N, minus a quarter of the cubic term built
// from f'h' and N's first-order integrand.
inline IdentityCheck check_substitution_rule(const SmoothFn& h, const SmoothFn& f,
                                             const Element& n) {
    IdentityCheck out;
    out.lhs = circle(h, circle(f, n));

    SmoothFn id = SmoothFn::variable();
    SmoothFn corr = f.derivative() * h.derivative() * n.phi1;
    out.rhs = circle(f * h, n) - Rational(1, 4) * integral_against_cubic(corr, id);
    out.ok = (out.lhs == out.rhs);
    return out;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json to_json(const Element& e) {
    nlohmann::json j;
    if (e.eta.is_exact() && boost::multiprecision::denominator(e.eta.rational()) == 1) {
        j["eta"] = static_cast<std::int64_t>(boost::multiprecision::numerator(e.eta.rational()));
    } else {
        j["eta"] = e.eta.to_double();
    }
    j["phi1"] = e.phi1.canonical_str();
    j["phi3"] = e.phi3.canonical_str();
    return j;
}

inline Element element_from_json(const nlohmann::json& j) {
    Element e;
    const auto& eta = j.at("eta");
    if (eta.is_number_integer()) {
        e.eta = Scalar(Rational(eta.get<std::int64_t>()));
    } else {
        e.eta = Scalar::inexact(eta.get<double>());
    }
    e.phi1 = SmoothFn::parse(j.at("phi1").get<std::string>());
    e.phi3 = SmoothFn::parse(j.at("phi3").get<std::string>());
    return e;
}

inline nlohmann::json to_json(const LimitDescriptor& d) {
    nlohmann::json j;
    if (d.eta.is_exact() && boost::multiprecision::denominator(d.eta.rational()) == 1) {
        j["eta"] = static_cast<std::int64_t>(boost::multiprecision::numerator(d.eta.rational()));
    } else {
        j["eta"] = d.eta.to_double();
    }
    j["big_phi"] = d.big_phi.canonical_str();
    j["psi"] = d.psi.canonical_str();
    return j;
}

// Deterministic random element for identity sweeps: small rational starting
// value, random polynomial integrands.
inline Element random_element(std::mt19937_64& gen, int max_degree) {
    const long num = static_cast<long>(gen() % 13) - 6;
    static constexpr long kDenoms[] = {1, 1, 2, 3, 4};
    const long den = kDenoms[gen() % 5];
    return Element(Scalar(Rational(num, den)), random_polynomial(gen, max_degree),
                   random_polynomial(gen, max_degree));
}

} // namespace weakstrat::strat
