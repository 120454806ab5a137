#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "weakstrat/fbm.hpp"
#include "weakstrat/parallel.hpp"
#include "weakstrat/riemann.hpp"
#include "weakstrat/rng.hpp"
#include "weakstrat/stratcalc.hpp"
#include "weakstrat/verify.hpp"

namespace ws = weakstrat;

namespace {

int run_kappa(long max_lag, bool as_json) {
    const double k2 = ws::strat::kappa_squared(max_lag);
    const double k = std::sqrt(k2);
    if (as_json) {
        nlohmann::json j{{"max_lag", max_lag}, {"kappa_squared", k2}, {"kappa", k}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("kappa_squared(%ld) = %.15f\n", max_lag, k2);
        std::printf("kappa             = %.15f\n", k);
    }
    return 0;
}

int run_sample(int n, double horizon, std::uint64_t seed, int paths, const std::string& out) {
    auto sampler = ws::fbm::cached_sampler(n, horizon);
    const std::uint64_t base = ws::rng::substream(seed, ws::rng::kTagPaths);
    std::ostringstream body;
    for (int i = 0; i < paths; ++i) {
        ws::fbm::Path p = sampler->sample(base ^ static_cast<std::uint64_t>(i));
        if (paths > 1) body << "# path " << i << "\n";
        ws::fbm::write_csv(p, body);
    }
    if (out.empty() || out == "-") {
        std::cout << body.str();
    } else {
        std::ofstream f(out);
        if (!f) throw std::runtime_error("cannot open " + out);
        f << body.str();
    }
    std::fprintf(stderr, "seed: %llu, n: %d, horizon: %g, paths: %d\n",
                 static_cast<unsigned long long>(seed), n, horizon, paths);
    return 0;
}

int run_element(const std::string& expr, bool as_json) {
    ws::seq::SeqPtr s = ws::seq::parse(expr);
    ws::strat::Element e = ws::seq::image(s);
    ws::strat::LimitDescriptor d = ws::strat::limit_descriptor(e);
    if (as_json) {
        nlohmann::json j;
        j["expression"] = ws::seq::str(s);
        j["element"] = ws::strat::to_json(e);
        j["limit"] = ws::strat::to_json(d);
        j["limit"]["kappa"] = ws::strat::kappa();
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("expression: %s\n", ws::seq::str(s).c_str());
        std::printf("element:    eta = %s, phi1 = %s, phi3 = %s\n",
                    ws::strat::to_json(e)["eta"].dump().c_str(), e.phi1.canonical_str().c_str(),
                    e.phi3.canonical_str().c_str());
        std::printf("limit:      eta + big_phi(B(t)) + kappa * int psi(B) dW\n");
        std::printf("            big_phi = %s\n", d.big_phi.canonical_str().c_str());
        std::printf("            psi     = %s\n", d.psi.canonical_str().c_str());
        std::printf("            kappa   = %.6f\n", ws::strat::kappa());
    }
    return 0;
}

int run_check_identities(int cases, std::uint64_t seed, int max_degree) {
    std::mt19937_64 gen(ws::rng::mix64(seed));
    int ok_cov = 0, ok_ito = 0, ok_sub = 0;
    for (int i = 0; i < cases; ++i) {
        ws::strat::Element n = ws::strat::random_element(gen, max_degree);
        ws::SmoothFn f = ws::random_polynomial(gen, max_degree);
        ws::SmoothFn h = ws::random_polynomial(gen, max_degree);
        ws::SmoothFn g = ws::random_polynomial(gen, max_degree);
        if (ws::strat::check_change_of_variable(f, n).ok) ++ok_cov;
        if (ws::strat::check_ito_formula(f, g).ok) ++ok_ito;
        if (ws::strat::check_substitution_rule(h, f, n).ok) ++ok_sub;
    }
    std::printf("seed: %llu, cases: %d, max degree: %d\n",
                static_cast<unsigned long long>(seed), cases, max_degree);
    std::printf("change-of-variable: %d/%d\n", ok_cov, cases);
    std::printf("ito-formula:        %d/%d\n", ok_ito, cases);
    std::printf("substitution:       %d/%d\n", ok_sub, cases);
    const bool all = ok_cov == cases && ok_ito == cases && ok_sub == cases;
    std::printf("%s\n", all ? "PASS" : "FAIL");
    return all ? 0 : 1;
}

int run_ucp(const std::string& lhs, const std::string& rhs, const std::vector<int>& levels,
            int paths, double threshold, std::uint64_t seed, bool as_json) {
    auto l = ws::seq::parse(lhs);
    auto r = ws::seq::parse(rhs);
    auto rep = ws::verify::ucp_compare(l, r, levels, paths, seed, threshold);
    if (as_json) {
        nlohmann::json j = ws::verify::to_json(rep);
        j["seed"] = seed;
        j["paths"] = paths;
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("seed: %llu, paths per level: %d\n", static_cast<unsigned long long>(seed),
                    paths);
        for (const auto& lv : rep.levels)
            std::printf("n = %5d: median sup-residual %.6g (p90 %.6g)\n", lv.n, lv.median_sup,
                        lv.p90_sup);
        std::printf("decreasing: %s, final < %g: %s%s\n", rep.decreasing ? "yes" : "no",
                    rep.final_threshold, rep.final_ok ? "yes" : "no",
                    rep.at_fp_floor ? ", all medians at the floating-point floor" : "");
        std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    }
    return rep.pass ? 0 : 1;
}

int run_law(const std::string& expr, int n, int paths, double t, const std::string& method_name,
            std::uint64_t seed, bool as_json) {
    auto s = ws::seq::parse(expr);
    ws::strat::LimitDescriptor d = ws::strat::limit_descriptor(ws::seq::image(s));
    ws::verify::LimitMethod method = ws::verify::parse_limit_method(method_name);

    auto sampler = ws::fbm::cached_sampler(n, std::max(1.0, t));
    const std::uint64_t pb = ws::rng::substream(seed, ws::rng::kTagPaths);
    const std::uint64_t fb = ws::rng::substream(seed, ws::rng::kTagFreshPaths);
    const std::uint64_t nb = ws::rng::substream(seed, ws::rng::kTagNoise);

    std::vector<double> realized(static_cast<std::size_t>(paths));
    std::vector<double> limit(static_cast<std::size_t>(paths));
    ws::parallel_for(realized.size(), [&](std::size_t i) {
        ws::fbm::Path p = sampler->sample(pb ^ static_cast<std::uint64_t>(i));
        ws::seq::StepFunction f = ws::seq::realize(s, p);
        realized[i] = f.values[p.index_at(t)];
        ws::fbm::Path q = sampler->sample(fb ^ static_cast<std::uint64_t>(i));
        limit[i] = ws::verify::simulate_limit(d, t, q, nb ^ static_cast<std::uint64_t>(i), method);
    });

    auto rep = ws::verify::law_compare(realized, limit);
    if (as_json) {
        nlohmann::json j = ws::verify::to_json(rep);
        j["seed"] = seed;
        j["n"] = n;
        j["t"] = t;
        j["method"] = method_name;
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("seed: %llu, n: %d, t: %g, paths: %d, method: %s\n",
                    static_cast<unsigned long long>(seed), n, t, paths, method_name.c_str());
        std::printf("ks distance %.4f vs band %.4f; variance gap %.4f vs %.2f\n", rep.ks_distance,
                    rep.ks_band, rep.var_gap, rep.var_tol);
        std::printf("moments (realized vs limit): mean %.4f / %.4f, var %.4f / %.4f, skew %.4f / "
                    "%.4f\n",
                    rep.mean_a, rep.mean_b, rep.var_a, rep.var_b, rep.skew_a, rep.skew_b);
        std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    }
    return rep.pass ? 0 : 1;
}

int run_joint(int n, int paths, double threshold, std::uint64_t seed, bool as_json) {
    auto sampler = ws::fbm::cached_sampler(n, 1.0);
    const std::uint64_t pb = ws::rng::substream(seed, ws::rng::kTagPaths);
    std::vector<double> b1(static_cast<std::size_t>(paths));
    std::vector<double> v3(static_cast<std::size_t>(paths));
    ws::parallel_for(b1.size(), [&](std::size_t i) {
        ws::fbm::Path p = sampler->sample(pb ^ static_cast<std::uint64_t>(i));
        b1[i] = p.values.back();
        v3[i] = ws::seq::power_sum(p, 3, false);
    });
    auto rep = ws::verify::correlation_check(b1, v3, threshold);
    if (as_json) {
        nlohmann::json j = ws::verify::to_json(rep);
        j["seed"] = seed;
        j["n"] = n;
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("seed: %llu, n: %d, paths: %d\n", static_cast<unsigned long long>(seed), n,
                    paths);
        std::printf("corr(B(1), sum dB^3) = %.4f, threshold %.4f\n", rep.correlation,
                    rep.threshold);
        std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    }
    return rep.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak Stratonovich calculus toolkit: symbolic elements of symmetric-sum "
                 "sequences and Monte Carlo verification of their limit laws"};
    app.require_subcommand(1);
    app.fallthrough(); // lets --seed appear after the subcommand name

    std::uint64_t seed = ws::rng::kDefaultMasterSeed;
    app.add_option("--seed", seed, "master seed (every run is deterministic in it)")
        ->capture_default_str();

    auto* ck = app.add_subcommand("kappa", "print the cubic-variation scale constant");
    long max_lag = 10000;
    bool ck_json = false;
    ck->add_option("--max-lag", max_lag, "series truncation")->capture_default_str();
    ck->add_flag("--json", ck_json, "machine-readable output");

    auto* cs = app.add_subcommand("sample", "sample paths on the uniform grid, CSV output");
    int s_n = 256, s_paths = 1;
    double s_horizon = 1.0;
    std::string s_out;
    cs->add_option("--n", s_n, "grid points per unit time")->capture_default_str();
    cs->add_option("--horizon", s_horizon, "time horizon")->capture_default_str();
    cs->add_option("--paths", s_paths, "number of paths")->capture_default_str();
    cs->add_option("--out", s_out, "output file ('-' or empty for stdout)");

    auto* ce = app.add_subcommand("element", "map a sequence expression to its limit element");
    std::string e_expr;
    bool ce_json = false;
    ce->add_option("expression", e_expr, "sequence expression")->required();
    ce->add_flag("--json", ce_json, "machine-readable output");

    auto* ci = app.add_subcommand("check-identities",
                                  "verify the symbolic calculus identities on random inputs");
    int i_cases = 100, i_deg = 5;
    ci->add_option("--cases", i_cases, "random cases per identity")->capture_default_str();
    ci->add_option("--max-degree", i_deg, "max polynomial degree")->capture_default_str();

    auto* cu = app.add_subcommand("ucp", "sup-residual comparison of two sequence expressions");
    std::string u_lhs, u_rhs;
    std::vector<int> u_levels{256, 1024, 4096};
    int u_paths = 100;
    double u_threshold = 0.05;
    bool cu_json = false;
    cu->add_option("--lhs", u_lhs, "left expression")->required();
    cu->add_option("--rhs", u_rhs, "right expression")->required();
    cu->add_option("--levels", u_levels, "grid sizes")->delimiter(',')->capture_default_str();
    cu->add_option("--paths", u_paths, "paths per level")->capture_default_str();
    cu->add_option("--threshold", u_threshold, "final median threshold")->capture_default_str();
    cu->add_flag("--json", cu_json, "machine-readable output");

    auto* cl = app.add_subcommand("law",
                                  "compare a realized sequence at time t with draws from its "
                                  "limit law");
    std::string l_expr, l_method = "conditional-gaussian";
    int l_n = 512, l_paths = 2000;
    double l_t = 1.0;
    bool cl_json = false;
    cl->add_option("expression", l_expr, "sequence expression")->required();
    cl->add_option("--n", l_n, "grid points per unit time")->capture_default_str();
    cl->add_option("--paths", l_paths, "sample size per side")->capture_default_str();
    cl->add_option("--t", l_t, "evaluation time")->capture_default_str();
    cl->add_option("--method", l_method, "conditional-gaussian or euler-ito")
        ->capture_default_str();
    cl->add_flag("--json", cl_json, "machine-readable output");

    auto* cj = app.add_subcommand("joint",
                                  "correlation between the endpoint and the cubic sum");
    int j_n = 512, j_paths = 5000;
    double j_threshold = 0.05;
    bool cj_json = false;
    cj->add_option("--n", j_n, "grid points per unit time")->capture_default_str();
    cj->add_option("--paths", j_paths, "number of paths")->capture_default_str();
    cj->add_option("--threshold", j_threshold, "absolute correlation bound")
        ->capture_default_str();
    cj->add_flag("--json", cj_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (ck->parsed()) return run_kappa(max_lag, ck_json);
        if (cs->parsed()) return run_sample(s_n, s_horizon, seed, s_paths, s_out);
        if (ce->parsed()) return run_element(e_expr, ce_json);
        if (ci->parsed()) return run_check_identities(i_cases, seed, i_deg);
        if (cu->parsed()) return run_ucp(u_lhs, u_rhs, u_levels, u_paths, u_threshold, seed,
                                         cu_json);
        if (cl->parsed()) return run_law(l_expr, l_n, l_paths, l_t, l_method, seed, cl_json);
        if (cj->parsed()) return run_joint(j_n, j_paths, j_threshold, seed, cj_json);
    } catch (const ws::ParseError& e) {
        std::fprintf(stderr, "expression error: %s\n", e.what());
        return 2;
    } catch (const ws::NotIntegrableError& e) {
        std::fprintf(stderr, "no closed-form antiderivative: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid argument: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
