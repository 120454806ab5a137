#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "weakstrat/stratcalc.hpp"

using namespace weakstrat;
using namespace weakstrat::strat;

TEST_CASE("cubic-variation scale constant") {
    REQUIRE(kappa_squared(0) == 6.0);
    // partial sums decrease monotonically toward the limit
    REQUIRE(kappa_squared(10) > kappa_squared(100));
    REQUIRE(kappa_squared(100) > kappa_squared(1000));
    // frozen value of the truncated series
    REQUIRE(std::fabs(kappa_squared(10000) - 5.391164368226856) < 1e-12);
    REQUIRE(std::fabs(kappa_squared(1000) - kappa_squared(10000)) < 1e-6);
    const double k = kappa();
    REQUIRE(k > 2.321);
    REQUIRE(k < 2.323);
    REQUIRE_THROWS_AS(kappa_squared(-1), std::invalid_argument);
}

TEST_CASE("element vector-space operations") {
    std::mt19937_64 gen(555);
    for (int i = 0; i < 30; ++i) {
        Element a = random_element(gen, 4);
        Element b = random_element(gen, 4);
        SmoothFn f = random_polynomial(gen, 3);
        REQUIRE(a + b == b + a);
        REQUIRE(a - a == zero_element());
        REQUIRE(Rational(2) * a == a + a);
        // circle and the constructors are linear in their function argument
        REQUIRE(circle(f, a + b) == circle(f, a) + circle(f, b));
        REQUIRE(circle(f, Rational(3) * a) == Rational(3) * circle(f, a));
    }
    SmoothFn f = SmoothFn::parse("x^2 - 1");
    SmoothFn g = SmoothFn::parse("x^3 + x");
    REQUIRE(from_function(f + g) == from_function(f) + from_function(g));
}

TEST_CASE("fixed elements") {
    SmoothFn x = SmoothFn::variable();

    Element e = circle(x.pow(2), from_function(x));
    REQUIRE(equal(e.phi1, x.pow(2)));
    REQUIRE(equal(e.phi3, SmoothFn::parse("1/4")));
    REQUIRE(e.eta.is_exact());
    REQUIRE(e.eta.rational() == 0);
    REQUIRE(e == from_function(SmoothFn::parse("x^3/3")) +
                     Rational(1, 6) * cubic_variation(from_function(x)));

    REQUIRE(cubic_variation(from_function(x)) ==
            Element(Scalar(Rational(0)), SmoothFn(), SmoothFn::constant(1L)));

    // triple covariation is the cubic integral of the product of slopes
    SmoothFn g = SmoothFn::parse("x^2");
    SmoothFn h = SmoothFn::parse("sin(x)");
    REQUIRE(triple_covariation(x, g, h) ==
            integral_against_cubic(x.derivative() * g.derivative() * h.derivative(), x));
}

TEST_CASE("limit descriptor round trip") {
    std::mt19937_64 gen(556);
    for (int i = 0; i < 200; ++i) {
        Element e = random_element(gen, 5);
        REQUIRE(recompose(limit_descriptor(e)) == e);
    }
    // fixed case: big_phi and psi of the B^3 integral
    SmoothFn x = SmoothFn::variable();
    auto d = limit_descriptor(circle(x.pow(2), from_function(x)));
    REQUIRE(equal(d.big_phi, SmoothFn::parse("x^3/3")));
    REQUIRE(equal(d.psi, SmoothFn::parse("1/6")));
    // antiderivatives are normalized to vanish at zero
    auto d2 = limit_descriptor(from_function(SmoothFn::parse("sin(x)")));
    REQUIRE(value_at_zero(d2.big_phi).to_double() == 0.0);
    REQUIRE(equal(d2.big_phi, SmoothFn::parse("sin(x)")));
}

TEST_CASE("descriptor requires an integrable first-order part") {
    Element e(Scalar(Rational(0)), SmoothFn::parse("exp(x^2)"), SmoothFn());
    REQUIRE_THROWS_AS(limit_descriptor(e), NotIntegrableError);
}

TEST_CASE("identity checkers pass on random polynomial data") {
    std::mt19937_64 gen(557);
    for (int i = 0; i < 50; ++i) {
        Element n = random_element(gen, 5);
        SmoothFn f = random_polynomial(gen, 5);
        SmoothFn h = random_polynomial(gen, 5);
        SmoothFn g = random_polynomial(gen, 5);
        REQUIRE(check_change_of_variable(f, n).ok);
        REQUIRE(check_ito_formula(f, g).ok);
        REQUIRE(check_substitution_rule(h, f, n).ok);
    }
}

TEST_CASE("identity checkers pass beyond polynomials") {
    SmoothFn x = SmoothFn::variable();
    REQUIRE(check_change_of_variable(SmoothFn::sin(x), from_function(x)).ok);
    REQUIRE(check_change_of_variable(SmoothFn::parse("x*exp(x)"), from_function(x)).ok);
    REQUIRE(check_ito_formula(SmoothFn::sin(x), SmoothFn::parse("x^2")).ok);
    REQUIRE(check_ito_formula(SmoothFn::exp(x), SmoothFn::parse("x^2/2")).ok);
    // nonzero starting point: both exact and transcendental initial values
    REQUIRE(check_ito_formula(SmoothFn::parse("x^3"), SmoothFn::parse("x + 1")).ok);
    REQUIRE(check_ito_formula(SmoothFn::sin(x), SmoothFn::parse("x + 1")).ok);
    REQUIRE(check_substitution_rule(SmoothFn::cos(x), SmoothFn::sin(x),
                                    from_function(SmoothFn::parse("x^2"))).ok);
}

TEST_CASE("a corrupted identity is detected") {
    SmoothFn x = SmoothFn::variable();
    Element n = from_function(x.pow(2));
    SmoothFn f = x.pow(3);
    SmoothFn h = x.pow(2);
    // substitution rule with the wrong correction coefficient
    Element lhs = circle(h, circle(f, n));
    Element wrong = circle(f * h, n) -
                    Rational(1, 3) * integral_against_cubic(
                                         f.derivative() * h.derivative() * n.phi1,
                                         SmoothFn::variable());
    REQUIRE(lhs != wrong);
    // element equality notices each component
    Element e = circle(x.pow(2), from_function(x));
    Element bad1 = e;
    bad1.eta = Scalar(Rational(1, 1000000));
    Element bad2 = e;
    bad2.phi1 = e.phi1 + SmoothFn::constant(Rational(1, 1000000));
    Element bad3 = e;
    bad3.phi3 = SmoothFn::parse("1/5");
    REQUIRE(e != bad1);
    REQUIRE(e != bad2);
    REQUIRE(e != bad3);
}

TEST_CASE("element json round trip") {
    SmoothFn x = SmoothFn::variable();
    Element e = circle(x.pow(2), from_function(x));
    auto j = to_json(e);
    REQUIRE(j["eta"].is_number_integer());
    REQUIRE(j["eta"].get<std::int64_t>() == 0);
    REQUIRE(j["phi1"].get<std::string>() == "x^2");
    REQUIRE(j["phi3"].get<std::string>() == "1/4");
    REQUIRE(element_from_json(j) == e);

    Element half = constant_element(Scalar(Rational(1, 2)));
    auto j2 = to_json(half);
    REQUIRE(j2["eta"].get<double>() == 0.5);
    REQUIRE(element_from_json(j2) == half);

    Element tr(value_at_zero(SmoothFn::parse("sin(x+1)")), x, SmoothFn());
    REQUIRE(element_from_json(to_json(tr)) == tr);
}

TEST_CASE("scalar closeness tolerates only tiny drift") {
    REQUIRE(scalar_close(Scalar(Rational(1, 3)), Scalar(Rational(1, 3))));
    REQUIRE_FALSE(scalar_close(Scalar(Rational(1, 3)), Scalar(Rational(1, 3) + Rational(1, 1000000))));
    REQUIRE(scalar_close(Scalar::inexact(1.0), Scalar::inexact(1.0 + 1e-12)));
    REQUIRE_FALSE(scalar_close(Scalar::inexact(1.0), Scalar::inexact(1.0 + 1e-6)));
}
