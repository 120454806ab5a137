// Acceptance suite: one line per criterion, [PASS]/[FAIL] plus the measured
// values. Runs every criterion by default; --criterion N runs one. Exit code 0
// only if every criterion that ran passed.
//
// Statistical criteria are evaluated at the fixed default master seed unless
// --seed is given; each criterion derives its own streams from
// mix64(master ^ id) so results do not depend on which subset runs.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "weakstrat/fbm.hpp"
#include "weakstrat/parallel.hpp"
#include "weakstrat/riemann.hpp"
#include "weakstrat/rng.hpp"
#include "weakstrat/stats.hpp"
#include "weakstrat/stratcalc.hpp"
#include "weakstrat/verify.hpp"

using namespace weakstrat;
using Clock = std::chrono::steady_clock;

namespace {

std::uint64_t g_master = rng::kDefaultMasterSeed;

std::uint64_t criterion_master(int id) {
    return rng::mix64(g_master ^ static_cast<std::uint64_t>(id));
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    char buf[1024];
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// --- criterion 1: the scale constant -----------------------------------------

Outcome criterion1() {
    const auto t0 = Clock::now();
    const double k2a = strat::kappa_squared(1000);
    const double k2b = strat::kappa_squared(10000);
    const double k = std::sqrt(k2b);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const double drift = std::fabs(k2a - k2b);
    Outcome o;
    o.pass = k > 2.321 && k < 2.323 && drift < 1e-6 && secs < 1.0;
    o.detail = fmt("kappa = %.9f (want within (2.321, 2.323)); truncation drift %.3g < 1e-6; "
                   "%.3f s",
                   k, drift, secs);
    return o;
}

// --- criteria 2 and 3: symbolic identity sweeps -------------------------------

Outcome sweep(int id, bool cov, bool ito, bool sub) {
    std::mt19937_64 gen(criterion_master(id));
    const int cases = 100;
    int ok_cov = 0, ok_ito = 0, ok_sub = 0;
    const auto t0 = Clock::now();
    for (int i = 0; i < cases; ++i) {
        strat::Element n = strat::random_element(gen, 5);
        SmoothFn f = random_polynomial(gen, 5);
        SmoothFn h = random_polynomial(gen, 5);
        SmoothFn g = random_polynomial(gen, 5);
        if (cov && strat::check_change_of_variable(f, n).ok) ++ok_cov;
        if (ito && strat::check_ito_formula(f, g).ok) ++ok_ito;
        if (sub && strat::check_substitution_rule(h, f, n).ok) ++ok_sub;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    Outcome o;
    o.pass = secs < 10.0;
    std::string parts;
    if (cov) {
        o.pass = o.pass && ok_cov == cases;
        parts += fmt("change-of-variable %d/%d", ok_cov, cases);
    }
    if (ito) {
        o.pass = o.pass && ok_ito == cases;
        parts += fmt("%sito-formula %d/%d", parts.empty() ? "" : ", ", ok_ito, cases);
    }
    if (sub) {
        o.pass = o.pass && ok_sub == cases;
        parts += fmt("%ssubstitution %d/%d", parts.empty() ? "" : ", ", ok_sub, cases);
    }
    o.detail = parts + fmt(" (degree <= 5, exact comparisons); %.2f s", secs);
    return o;
}

Outcome criterion2() { return sweep(2, true, false, false); }
Outcome criterion3() { return sweep(3, false, true, true); }

// --- criterion 4: the closed-form quartic example -----------------------------

Outcome criterion4() {
    SmoothFn x = SmoothFn::variable();
    SmoothFn m = SmoothFn::parse("x^2/2");
    strat::Element lhs = strat::circle(m, strat::from_function(m));
    strat::Element rhs = strat::circle(SmoothFn::parse("x^3/2"), strat::from_function(x)) -
                         Rational(1, 4) * strat::integral_against_cubic(x, x);
    strat::Element want(Scalar(Rational(0)), SmoothFn::parse("x^3/2"), SmoothFn::parse("x/8"));
    Outcome o;
    o.pass = lhs == rhs && lhs == want && rhs == want;
    o.detail = fmt("both sides reduce to (eta, phi1, phi3) = (0, %s, %s)",
                   lhs.phi1.canonical_str().c_str(), lhs.phi3.canonical_str().c_str());
    return o;
}

// --- criterion 5: telescoping of matched symmetric sums ------------------------

Outcome criterion5() {
    const std::uint64_t base = rng::substream(criterion_master(5), rng::kTagPaths);
    auto sampler = fbm::cached_sampler(4096, 1.0);
    double worst = 0.0;
    for (const char* theta : {"x", "x^2", "sin(x)"}) {
        SmoothFn f = SmoothFn::parse(theta);
        auto expr = seq::make_circle(f, seq::make_from_function(f));
        const double f0 = f(0.0);
        for (int i = 0; i < 10; ++i) {
            fbm::Path p = sampler->sample(base ^ static_cast<std::uint64_t>(i));
            seq::StepFunction got = seq::realize(expr, p);
            for (std::size_t k = 0; k < got.values.size(); ++k) {
                const double fx = f(p.values[k]);
                worst = std::max(worst,
                                 std::fabs(got.values[k] - 0.5 * (fx * fx - f0 * f0)));
            }
        }
    }
    Outcome o;
    o.pass = worst < 1e-10;
    o.detail = fmt("worst grid-point deviation %.3g < 1e-10 over {x, x^2, sin(x)}, n = 4096, "
                   "10 paths",
                   worst);
    return o;
}

// --- criterion 6: ucp residuals of the two pinned identities -------------------

std::string ucp_line(const verify::UcpReport& r) {
    std::string s = "medians";
    for (const auto& lv : r.levels) s += fmt(" %.3g", lv.median_sup);
    s += r.at_fp_floor ? " (exact identity: all at the floating-point floor)" : "";
    return s;
}

Outcome criterion6() {
    const std::vector<int> levels{256, 1024, 4096};
    auto ito_l = seq::parse("fromfn(x^2)");
    auto ito_r = seq::parse("circle(2*x, fromfn(x))");
    auto sub_l = seq::parse("circle(x^2/2, fromfn(x^2/2))");
    auto sub_r = seq::parse("circle(x^3/2, fromfn(x)) - 1/4*circle(x, cubicvar(fromfn(x)))");
    auto ra = verify::ucp_compare(ito_l, ito_r, levels, 100, criterion_master(6), 0.05);
    auto rb = verify::ucp_compare(sub_l, sub_r, levels, 100, criterion_master(6) + 1, 0.05);
    Outcome o;
    o.pass = ra.pass && rb.pass;
    o.detail = "ito residual " + ucp_line(ra) + "; substitution residual " + ucp_line(rb) +
               "; 100 paths at n in {256, 1024, 4096}, final threshold 0.05";
    return o;
}

// --- shared 512-grid ensemble for criteria 7, 8 and the sixth-moment check ----

struct Ensemble512 {
    std::vector<double> b1, v3, v6;
};

const Ensemble512& ensemble512() {
    static Ensemble512 e = [] {
        Ensemble512 out;
        const int paths = 5000;
        auto sampler = fbm::cached_sampler(512, 1.0);
        const std::uint64_t base = rng::substream(criterion_master(7), rng::kTagPaths);
        out.b1.resize(paths);
        out.v3.resize(paths);
        out.v6.resize(paths);
        parallel_for(static_cast<std::size_t>(paths), [&](std::size_t i) {
            fbm::Path p = sampler->sample(base ^ i);
            out.b1[i] = p.values.back();
            out.v3[i] = seq::power_sum(p, 3, false);
            out.v6[i] = seq::power_sum(p, 6, false);
        });
        return out;
    }();
    return e;
}

Outcome criterion7() {
    const auto& e = ensemble512();
    const double sd = std::sqrt(stats::variance(e.v3));
    const double sd_gap = std::fabs(sd / 2.322 - 1.0);

    const int m = static_cast<int>(e.v3.size());
    const double kap = strat::kappa();
    rng::NormalStream fresh(rng::substream(criterion_master(7), rng::kTagFreshPaths));
    std::vector<double> ref(e.v3.size());
    for (auto& v : ref) v = kap * fresh.normal();
    const double ks = stats::ks_distance(e.v3, ref);
    const double band = 1.63 * std::sqrt(2.0 / m);

    Outcome o;
    o.pass = sd_gap < 0.05 && ks < band;
    o.detail = fmt("sd(sum dB^3) = %.4f vs 2.322 (gap %.3f < 0.05); ks = %.4f vs band %.4f; "
                   "n = 512, %d paths",
                   sd, sd_gap, ks, band, m);
    return o;
}

Outcome criterion8() {
    const auto& e = ensemble512();
    auto rep = verify::correlation_check(e.b1, e.v3, 0.05);
    const double pop = 3.0 * std::pow(512.0, -1.0 / 3.0) / std::sqrt(stats::variance(e.v3));
    Outcome o;
    o.pass = rep.pass;
    o.detail = fmt("|corr(B(1), sum dB^3)| = %.4f vs 0.05 at n = 512, %zu paths "
                   "(population value 3*n^(-1/3)/sd = %.3f; it vanishes only as n grows, "
                   "so this bound is unattainable at any grid this suite can afford)",
                   std::fabs(rep.correlation), e.b1.size(), pop);
    return o;
}

Outcome criterion9() {
    const std::vector<int> levels{256, 1024, 4096};
    const std::uint64_t base = rng::substream(criterion_master(9), rng::kTagPaths);
    std::vector<double> medians;
    for (int n : levels) {
        auto sampler = fbm::cached_sampler(n, 1.0);
        std::vector<double> v(100);
        parallel_for(v.size(), [&](std::size_t i) {
            v[i] = seq::power_sum(
                sampler->sample(base ^ (static_cast<std::uint64_t>(n) << 32) ^ i), 7, true);
        });
        medians.push_back(stats::median(v));
    }
    const bool decreasing = medians[0] > medians[1] && medians[1] > medians[2];
    const bool small = medians.back() < 0.02;

    const auto& e = ensemble512();
    const double m6 = stats::mean(e.v6);
    const bool sixth = std::fabs(m6 / 15.0 - 1.0) < 0.10;

    Outcome o;
    o.pass = decreasing && small && sixth;
    o.detail = fmt("sum |dB|^7 medians %.3f / %.3f / %.3f at n in {256, 1024, 4096} "
                   "(decreasing: %s; final < 0.02: %s, theoretical mean 38.3*n^(-1/6) = %.2f at "
                   "n = 4096); mean sum dB^6 = %.3f vs 15 +- 10%%: %s",
                   medians[0], medians[1], medians[2], decreasing ? "yes" : "no",
                   small ? "yes" : "no", 38.2985 * std::pow(4096.0, -1.0 / 6.0), m6,
                   sixth ? "yes" : "no");
    return o;
}

Outcome criterion10() {
    const int n = 4096, paths = 5000;
    auto sampler = fbm::cached_sampler(n, 1.0);
    const std::uint64_t pb = rng::substream(criterion_master(10), rng::kTagPaths);
    auto expr = seq::parse("circle(x^2, fromfn(x))");
    std::vector<double> realized(paths);
    parallel_for(realized.size(), [&](std::size_t i) {
        fbm::Path p = sampler->sample(pb ^ i);
        realized[i] = seq::realize(expr, p).values.back();
    });

    // limit law: B(1)^3/3 + (kappa/6) Z with independent standard normals
    const double kap = strat::kappa();
    rng::NormalStream fresh(rng::substream(criterion_master(10), rng::kTagFreshPaths));
    rng::NormalStream noise(rng::substream(criterion_master(10), rng::kTagNoise));
    std::vector<double> ref(realized.size());
    for (auto& v : ref) {
        const double z1 = fresh.normal();
        v = z1 * z1 * z1 / 3.0 + (kap / 6.0) * noise.normal();
    }

    auto rep = verify::law_compare(realized, ref, 1.63, 0.10);
    Outcome o;
    o.pass = rep.pass;
    o.detail = fmt("ks = %.4f vs band %.4f (%s); variance %.4f vs %.4f, gap %.3f vs 0.10 (%s); "
                   "n = 4096, %d paths per side",
                   rep.ks_distance, rep.ks_band, rep.pass_ks ? "ok" : "exceeded", rep.var_a,
                   rep.var_b, rep.var_gap, rep.pass_var ? "ok" : "exceeded", paths);
    return o;
}

const char* kNames[] = {
    "",
    "cubic-variation scale constant",
    "change-of-variable identity sweep",
    "ito-formula and substitution sweeps",
    "quartic closed-form example",
    "symmetric-sum telescoping",
    "ucp residuals of pinned identities",
    "cubic-variation limit law",
    "endpoint independence",
    "higher-power sums",
    "mixture limit law",
};

Outcome (*kCriteria[])() = {nullptr,     criterion1, criterion2, criterion3, criterion4,
                            criterion5,  criterion6, criterion7, criterion8, criterion9,
                            criterion10};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
            if (only < 1 || only > 10) {
                std::fprintf(stderr, "criterion must be 1..10\n");
                return 2;
            }
        } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
            g_master = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N] [--seed S]\n");
            return 2;
        }
    }

    std::printf("master seed: %llu\n", static_cast<unsigned long long>(g_master));
    bool all_pass = true;
    const auto t0 = Clock::now();
    for (int id = 1; id <= 10; ++id) {
        if (only && id != only) continue;
        Outcome o = kCriteria[id]();
        all_pass = all_pass && o.pass;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, kNames[id],
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("total: %.1f s\n", std::chrono::duration<double>(Clock::now() - t0).count());
    return all_pass ? 0 : 1;
}
