#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "weakstrat/rng.hpp"

namespace weakstrat::fbm {

// Hurst index of the public surface. The kernel is parameterized internally so
// the harness can cross-check machinery at hurst = 1/2 (standard Brownian
// motion), but only 1/6 is supported API.
inline constexpr double kHurst = 1.0 / 6.0;

// Hard cap on grid points per path; the dense factorization above this size is
// not worth its memory.
inline constexpr long kMaxGridPoints = 8192;

inline double covariance_h(double s, double t, double hurst) {
    if (s < 0.0 || t < 0.0) throw std::invalid_argument("covariance: times must be nonnegative");
    const double p = 2.0 * hurst;
    return 0.5 * (std::pow(t, p) + std::pow(s, p) - std::pow(std::fabs(t - s), p));
}

// E[B(s) B(t)] = (t^(1/3) + s^(1/3) - |t-s|^(1/3)) / 2
inline double covariance(double s, double t) { return covariance_h(s, t, kHurst); }

// One sampled path on the uniform grid t_j = j/n, j = 0..floor(n*horizon).
struct Path {
    int n = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> values; // values[j] = B(j/n), values[0] = 0

    std::size_t size() const { return values.size(); }
    double time(std::size_t j) const { return static_cast<double>(j) / n; }
    // last grid index with t_j <= t
    std::size_t index_at(double t) const {
        if (t < 0.0) throw std::invalid_argument("index_at: negative time");
        auto j = static_cast<std::size_t>(std::floor(static_cast<double>(n) * t + 1e-12));
        return std::min(j, values.size() - 1);
    }
};

inline long grid_points(int n, double horizon) {
    if (n < 1) throw std::invalid_argument("grid: n must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("grid: horizon must be positive");
    // tolerate floating dust in n*horizon just below an integer
    return static_cast<long>(std::floor(static_cast<double>(n) * horizon + 1e-9));
}

// Exact Gaussian sampling: Cholesky factor of the kernel matrix on the grid,
// computed once per (n, horizon) and reused for every path.
class PathSampler {
public:
    PathSampler(int n, double horizon, double hurst = kHurst)
        : n_(n), horizon_(horizon) {
        m_ = grid_points(n, horizon);
        if (m_ < 1 || m_ > kMaxGridPoints)
            throw std::invalid_argument("grid size " + std::to_string(m_) +
                                        " outside [1, " + std::to_string(kMaxGridPoints) + "]");
        Eigen::MatrixXd cov(m_, m_);
        for (long i = 0; i < m_; ++i) {
            const double ti = static_cast<double>(i + 1) / n;
            for (long j = 0; j <= i; ++j) {
                const double tj = static_cast<double>(j + 1) / n;
                cov(i, j) = covariance_h(tj, ti, hurst);
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("covariance matrix is not positive definite "
                                     "(kernel implementation bug)");
        chol_ = llt.matrixL();
    }

    int n() const { return n_; }
    double horizon() const { return horizon_; }
    long grid_size() const { return m_; }

    // Thread-safe: per-call state only. Same seed, same path, bit for bit.
    Path sample(std::uint64_t seed) const {
        rng::NormalStream stream(seed);
        Eigen::VectorXd z(m_);
        for (long i = 0; i < m_; ++i) z(i) = stream.normal();
        Eigen::VectorXd b = chol_.triangularView<Eigen::Lower>() * z;
        Path p;
        p.n = n_;
        p.horizon = horizon_;
        p.seed = seed;
        p.values.resize(static_cast<std::size_t>(m_) + 1);
        p.values[0] = 0.0;
        for (long i = 0; i < m_; ++i) p.values[static_cast<std::size_t>(i) + 1] = b(i);
        return p;
    }

private:
    int n_;
    double horizon_;
    long m_ = 0;
    Eigen::MatrixXd chol_;
};

// Process-wide sampler cache keyed by (n, horizon, hurst). Factors are
// immutable once built, so shared use across threads is safe.
inline std::shared_ptr<const PathSampler> cached_sampler(int n, double horizon,
                                                         double hurst = kHurst) {
    static std::map<std::tuple<int, double, double>, std::shared_ptr<const PathSampler>> cache;
    static std::mutex mu;
    const auto key = std::make_tuple(n, horizon, hurst);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto sampler = std::make_shared<const PathSampler>(n, horizon, hurst);
    cache.emplace(key, sampler);
    return sampler;
}

inline Path sample_path(int n, double horizon, std::uint64_t seed) {
    return cached_sampler(n, horizon)->sample(seed);
}

// Increments B(t_j) - B(t_{j-1}), j = 1..m.
inline std::vector<double> increments(const Path& p) {
    std::vector<double> d;
    if (p.values.size() < 2) return d;
    d.resize(p.values.size() - 1);
    for (std::size_t j = 1; j < p.values.size(); ++j) d[j - 1] = p.values[j] - p.values[j - 1];
    return d;
}

inline void write_csv(const Path& p, std::ostream& os) {
    os << "t,B\n";
    char buf[64];
    for (std::size_t j = 0; j < p.values.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.time(j), p.values[j]);
        os << buf;
    }
}

} // namespace weakstrat::fbm
