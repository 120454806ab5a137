#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "weakstrat/verify.hpp"

using namespace weakstrat;

TEST_CASE("identical realizations sit at the floating-point floor") {
    auto rep = verify::ucp_compare(seq::parse("fromfn(x^2)"), seq::parse("circle(2*x, fromfn(x))"),
                                   {64, 256}, 20, 7);
    REQUIRE(rep.at_fp_floor);
    REQUIRE(rep.final_ok);
    REQUIRE(rep.pass);
    for (const auto& lv : rep.levels) REQUIRE(lv.median_sup < 1e-12);
}

TEST_CASE("a genuine correction-term residual decreases but stays visible") {
    auto lhs = seq::parse("fromfn(x^6)");
    auto rhs = seq::parse("circle(6*x^5, fromfn(x)) - 10*circle(x^3, cubicvar(fromfn(x)))");
    REQUIRE(seq::image(lhs) == seq::image(rhs));
    auto rep = verify::ucp_compare(lhs, rhs, {128, 1024}, 100, 7);
    INFO(rep.levels[0].median_sup << " -> " << rep.levels[1].median_sup);
    REQUIRE(rep.decreasing);
    REQUIRE_FALSE(rep.at_fp_floor);
    REQUIRE_FALSE(rep.final_ok); // far above the default threshold at these grids
    REQUIRE_FALSE(rep.pass);
}

TEST_CASE("ucp comparison rejects expressions with different limits") {
    REQUIRE_THROWS_AS(
        verify::ucp_compare(seq::parse("fromfn(x)"), seq::parse("fromfn(x^2)"), {64}, 4, 7),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        verify::ucp_compare(seq::parse("fromfn(x)"), seq::parse("fromfn(x)"), {}, 4, 7),
        std::invalid_argument);
}

TEST_CASE("ucp results are deterministic in the master seed") {
    auto lhs = seq::parse("fromfn(x^6)");
    auto rhs = seq::parse("circle(6*x^5, fromfn(x)) - 10*circle(x^3, cubicvar(fromfn(x)))");
    auto r1 = verify::ucp_compare(lhs, rhs, {64}, 10, 123);
    auto r2 = verify::ucp_compare(lhs, rhs, {64}, 10, 123);
    auto r3 = verify::ucp_compare(lhs, rhs, {64}, 10, 124);
    REQUIRE(r1.levels[0].median_sup == r2.levels[0].median_sup);
    REQUIRE(r1.levels[0].median_sup != r3.levels[0].median_sup);
}

TEST_CASE("limit draws of the cubic variation have the right scale") {
    auto d = strat::limit_descriptor(seq::image(seq::parse("cubicvar(fromfn(x))")));
    REQUIRE(equal(d.psi, SmoothFn::constant(1L)));
    REQUIRE(d.big_phi.is_zero());

    auto sampler = fbm::cached_sampler(64, 1.0);
    const std::uint64_t pb = rng::substream(1729, rng::kTagPaths);
    const std::uint64_t nb = rng::substream(1729, rng::kTagNoise);
    const int m = 4000;
    std::vector<double> cg(m), eu(m);
    for (int i = 0; i < m; ++i) {
        auto p = sampler->sample(pb ^ static_cast<std::uint64_t>(i));
        cg[i] = verify::simulate_limit(d, 1.0, p, nb ^ static_cast<std::uint64_t>(i),
                                       verify::LimitMethod::ConditionalGaussian);
        eu[i] = verify::simulate_limit(d, 1.0, p, nb ^ static_cast<std::uint64_t>(i),
                                       verify::LimitMethod::EulerIto);
    }
    REQUIRE(std::fabs(stats::variance(cg) / strat::kappa_squared() - 1.0) < 0.10);
    REQUIRE(std::fabs(stats::variance(eu) / strat::kappa_squared() - 1.0) < 0.10);
    REQUIRE(std::fabs(stats::mean(cg)) < 0.10);

    // the two integration methods agree in law
    auto law = verify::law_compare(cg, eu);
    REQUIRE(law.pass);

    // deterministic given (path, noise seed)
    auto p = sampler->sample(pb ^ 5);
    REQUIRE(verify::simulate_limit(d, 1.0, p, nb, verify::LimitMethod::ConditionalGaussian) ==
            verify::simulate_limit(d, 1.0, p, nb, verify::LimitMethod::ConditionalGaussian));
}

TEST_CASE("limit draws pick up the path-dependent variance") {
    // element with big_phi = 0 and psi = x: variance of the limit at t=1 is
    // kappa^2 * E int_0^1 B(s)^2 ds = kappa^2 * 3/4
    auto e = strat::integral_against_cubic(SmoothFn::variable(), SmoothFn::variable());
    auto d = strat::limit_descriptor(e);
    REQUIRE(d.big_phi.is_zero());
    REQUIRE(equal(d.psi, SmoothFn::variable()));
    auto sampler = fbm::cached_sampler(128, 1.0);
    const std::uint64_t pb = rng::substream(31, rng::kTagPaths);
    const std::uint64_t nb = rng::substream(31, rng::kTagNoise);
    const int m = 4000;
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) {
        auto p = sampler->sample(pb ^ static_cast<std::uint64_t>(i));
        v[i] = verify::simulate_limit(d, 1.0, p, nb ^ static_cast<std::uint64_t>(i),
                                      verify::LimitMethod::ConditionalGaussian);
    }
    const double want = strat::kappa_squared() * 0.75;
    REQUIRE(std::fabs(stats::variance(v) / want - 1.0) < 0.12);
}

TEST_CASE("law comparison flags broken scale and passes matching laws") {
    rng::NormalStream s1(11), s2(22), s3(33);
    std::vector<double> a(3000), b(3000), c(3000);
    for (auto& v : a) v = s1.normal();
    for (auto& v : b) v = 1.5 * s2.normal();
    for (auto& v : c) v = s3.normal();
    auto bad = verify::law_compare(a, b);
    REQUIRE_FALSE(bad.pass);
    REQUIRE_FALSE(bad.pass_var);
    REQUIRE_FALSE(bad.pass_ks);
    auto good = verify::law_compare(a, c);
    REQUIRE(good.pass);
    REQUIRE(good.ks_band == Catch::Approx(1.63 * std::sqrt(2.0 / 3000.0)).epsilon(1e-12));
    REQUIRE_THROWS_AS(verify::law_compare({1.0}, a), std::invalid_argument);
}

TEST_CASE("correlation check") {
    rng::NormalStream s1(44), s2(55);
    std::vector<double> a(4000), b(4000);
    for (auto& v : a) v = s1.normal();
    for (auto& v : b) v = s2.normal();
    REQUIRE(verify::correlation_check(a, b, 0.05).pass);
    REQUIRE_FALSE(verify::correlation_check(a, a, 0.05).pass);
    auto r = verify::correlation_check(a, a, 0.05);
    REQUIRE(r.correlation == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reports serialize with the documented fields") {
    auto rep = verify::ucp_compare(seq::parse("fromfn(x^2)"), seq::parse("circle(2*x, fromfn(x))"),
                                   {64}, 5, 7);
    auto j = verify::to_json(rep);
    REQUIRE(j["levels"].size() == 1);
    REQUIRE(j["sup_residuals"][0].contains("median"));
    REQUIRE(j.contains("pass"));

    rng::NormalStream s1(1), s2(2);
    std::vector<double> a(100), b(100);
    for (auto& v : a) v = s1.normal();
    for (auto& v : b) v = s2.normal();
    auto lj = verify::to_json(verify::law_compare(a, b));
    REQUIRE(lj.contains("ks_distance"));
    REQUIRE(lj["moment_gaps"].contains("variance"));
    auto cj = verify::to_json(verify::correlation_check(a, b));
    REQUIRE(cj.contains("correlation"));
}

TEST_CASE("method parsing") {
    REQUIRE(verify::parse_limit_method("euler-ito") == verify::LimitMethod::EulerIto);
    REQUIRE(verify::parse_limit_method("conditional-gaussian") ==
            verify::LimitMethod::ConditionalGaussian);
    REQUIRE_THROWS_AS(verify::parse_limit_method("exact"), std::invalid_argument);
}
