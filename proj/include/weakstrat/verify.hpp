#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "weakstrat/fbm.hpp"
#include "weakstrat/kahan.hpp"
#include "weakstrat/parallel.hpp"
#include "weakstrat/riemann.hpp"
#include "weakstrat/rng.hpp"
#include "weakstrat/stats.hpp"
#include "weakstrat/stratcalc.hpp"

namespace weakstrat::verify {

enum class LimitMethod {
    // Given the path, the stochastic-integral term is a centered normal with
    // variance kappa^2 * (1/n) * sum of psi(B(t_j))^2 over left endpoints, so
    // a single draw with that variance is exact in conditional distribution.
    ConditionalGaussian,
    // Left-endpoint Euler sum against an independent discretized Brownian
    // motion; carries its own discretization error. Kept for cross-checks.
    EulerIto,
};

inline LimitMethod parse_limit_method(const std::string& s) {
    if (s == "conditional-gaussian") return LimitMethod::ConditionalGaussian;
    if (s == "euler-ito") return LimitMethod::EulerIto;
    throw std::invalid_argument("unknown limit method: " + s);
}

// One draw of eta + big_phi(B(t)) + kappa * int_0^t psi(B) dW conditional on
// the sampled path, with W driven by noise_seed.
inline double simulate_limit(const strat::LimitDescriptor& d, double t, const fbm::Path& path,
                             std::uint64_t noise_seed, LimitMethod method) {
    static const double kap = strat::kappa();
    const std::size_t k = path.index_at(t);
    const double dt = 1.0 / path.n;
    rng::NormalStream noise(noise_seed);
    double ito = 0.0;
    if (method == LimitMethod::ConditionalGaussian) {
        KahanSum q;
        for (std::size_t j = 0; j < k; ++j) {
            const double p = d.psi(path.values[j]);
            q.add(p * p);
        }
        ito = kap * std::sqrt(q.value() * dt) * noise.normal();
    } else {
        KahanSum acc;
        const double sq = std::sqrt(dt);
        for (std::size_t j = 0; j < k; ++j) acc.add(d.psi(path.values[j]) * sq * noise.normal());
        ito = kap * acc.value();
    }
    return d.eta.to_double() + d.big_phi(path.values[k]) + ito;
}

// --- ucp comparison ----------------------------------------------------------

struct UcpLevel {
    int n = 0;
    double median_sup = 0.0;
    double p90_sup = 0.0;
};

struct UcpReport {
    std::vector<UcpLevel> levels;
    double final_threshold = 0.0;
    double fp_floor = 0.0;
    bool decreasing = false;  // medians strictly decrease across levels
    bool final_ok = false;    // last median under the threshold
    bool at_fp_floor = false; // every median under the floating-point floor
    bool pass = false;
};

// Sup-distance between the realizations of two sequence expressions with the
// same limit element, across grid refinements. When the two realizations
// coincide in exact arithmetic the medians sit at the floating-point floor and
// a monotonicity requirement is vacuous, hence the fp_floor branch.
inline UcpReport ucp_compare(const seq::SeqPtr& lhs, const seq::SeqPtr& rhs,
                             const std::vector<int>& levels, int paths, std::uint64_t master,
                             double final_threshold = 0.05, double horizon = 1.0,
                             double fp_floor = 1e-10) {
    if (!(seq::image(lhs) == seq::image(rhs)))
        throw std::invalid_argument("ucp_compare: expressions have different limit elements");
    if (levels.empty() || paths < 1) throw std::invalid_argument("ucp_compare: empty design");

    UcpReport rep;
    rep.final_threshold = final_threshold;
    rep.fp_floor = fp_floor;
    const std::uint64_t base = rng::substream(master, rng::kTagPaths);
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const int n = levels[li];
        auto sampler = fbm::cached_sampler(n, horizon);
        std::vector<double> sups(static_cast<std::size_t>(paths));
        parallel_for(sups.size(), [&](std::size_t i) {
            const std::uint64_t seed =
                base ^ (static_cast<std::uint64_t>(n) << 32) ^ static_cast<std::uint64_t>(i);
            fbm::Path p = sampler->sample(seed);
            sups[i] = seq::sup_abs_diff(seq::realize(lhs, p), seq::realize(rhs, p));
        });
        UcpLevel lv;
        lv.n = n;
        lv.median_sup = stats::median(sups);
        lv.p90_sup = stats::quantile(sups, 0.9);
        rep.levels.push_back(lv);
    }

    rep.decreasing = true;
    for (std::size_t i = 1; i < rep.levels.size(); ++i)
        if (!(rep.levels[i].median_sup < rep.levels[i - 1].median_sup)) rep.decreasing = false;
    rep.at_fp_floor = true;
    for (const auto& lv : rep.levels)
        if (!(lv.median_sup < fp_floor)) rep.at_fp_floor = false;
    rep.final_ok = rep.levels.back().median_sup < final_threshold;
    rep.pass = rep.final_ok && (rep.decreasing || rep.at_fp_floor);
    return rep;
}

inline nlohmann::json to_json(const UcpReport& r) {
    nlohmann::json j;
    j["levels"] = nlohmann::json::array();
    j["sup_residuals"] = nlohmann::json::array();
    for (const auto& lv : r.levels) {
        j["levels"].push_back(lv.n);
        j["sup_residuals"].push_back({{"n", lv.n},
                                      {"median", lv.median_sup},
                                      {"p90", lv.p90_sup}});
    }
    j["final_threshold"] = r.final_threshold;
    j["decreasing"] = r.decreasing;
    j["final_ok"] = r.final_ok;
    j["at_fp_floor"] = r.at_fp_floor;
    j["pass"] = r.pass;
    return j;
}

// --- law comparison -----------------------------------------------------------

struct LawReport {
    std::size_t m_a = 0, m_b = 0;
    double ks_distance = 0.0;
    double ks_band = 0.0;
    double mean_a = 0.0, mean_b = 0.0;
    double var_a = 0.0, var_b = 0.0;
    double skew_a = 0.0, skew_b = 0.0;
    double mean_gap = 0.0; // |mean_a - mean_b|
    double var_gap = 0.0;  // |var_a / var_b - 1|
    double skew_gap = 0.0; // |skew_a - skew_b|
    double var_tol = 0.0;
    bool pass_ks = false;
    bool pass_var = false;
    bool pass = false;
};

/// Two-sample comparison: KS distance against the asymptotic band
// coeff * sqrt((m_a + m_b) / (m_a * m_b)) (coeff 1.63 is the 1% level), plus a
// relative variance gap. Mean and skewness gaps are reported, not gated.
inline LawReport law_compare(const std::vector<double>& a, const std::vector<double>& b,
                             double band_coeff = 1.63, double var_tol = 0.10) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("law_compare: too few samples");
    LawReport r;
    r.m_a = a.size();
    r.m_b = b.size();
    r.ks_distance = stats::ks_distance(a, b);
    const double ma = static_cast<double>(a.size()), mb = static_cast<double>(b.size());
    r.ks_band = band_coeff * std::sqrt((ma + mb) / (ma * mb));
    r.mean_a = stats::mean(a);
    r.mean_b = stats::mean(b);
    r.var_a = stats::variance(a);
    r.var_b = stats::variance(b);
    r.skew_a = stats::skewness(a);
    r.skew_b = stats::skewness(b);
    r.mean_gap = std::fabs(r.mean_a - r.mean_b);
    r.var_gap = std::fabs(r.var_a / r.var_b - 1.0);
    r.skew_gap = std::fabs(r.skew_a - r.skew_b);
    r.var_tol = var_tol;
    r.pass_ks = r.ks_distance < r.ks_band;
    r.pass_var = r.var_gap < var_tol;
    r.pass = r.pass_ks && r.pass_var;
    return r;
}

inline nlohmann::json to_json(const LawReport& r) {
    return nlohmann::json{{"m_a", r.m_a},
                          {"m_b", r.m_b},
                          {"ks_distance", r.ks_distance},
                          {"ks_band", r.ks_band},
                          {"moment_gaps",
                           {{"mean", r.mean_gap}, {"variance", r.var_gap}, {"skew", r.skew_gap}}},
                          {"moments_a",
                           {{"mean", r.mean_a}, {"variance", r.var_a}, {"skew", r.skew_a}}},
                          {"moments_b",
                           {{"mean", r.mean_b}, {"variance", r.var_b}, {"skew", r.skew_b}}},
                          {"pass_ks", r.pass_ks},
                          {"pass_var", r.pass_var},
                          {"pass", r.pass}};
}

struct CorrelationReport {
    std::size_t m = 0;
    double correlation = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

inline CorrelationReport correlation_check(const std::vector<double>& a,
                                           const std::vector<double>& b,
                                           double threshold = 0.05) {
    CorrelationReport r;
    r.m = a.size();
    r.correlation = stats::correlation(a, b);
    r.threshold = threshold;
    r.pass = std::fabs(r.correlation) < threshold;
    return r;
}

inline nlohmann::json to_json(const CorrelationReport& r) {
    return nlohmann::json{{"m", r.m},
                          {"correlation", r.correlation},
                          {"threshold", r.threshold},
                          {"pass", r.pass}};
}

} // namespace weakstrat::verify
