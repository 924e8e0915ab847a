#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wald/errors.hpp"
#include "wald/model.hpp"
#include "wald/policy.hpp"
#include "wald/tariff.hpp"

namespace wald {

// ============================================================================
// Monte Carlo ground truth for X_t = (-1 + 2y) t + sigma B_t
// ============================================================================

struct SimConfig {
    double dt = 1e-3;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    double max_time = 1000.0;

    void validate() const {
        if (!(dt > 0.0)) raise(ErrorKind::PreconditionViolated, "dt must be positive");
        if (n_paths < 1000)
            raise(ErrorKind::PreconditionViolated,
                  "at least 1000 paths per reported statistic");
        if (!(max_time > 0.0))
            raise(ErrorKind::PreconditionViolated, "max_time must be positive");
    }
};

struct EmpiricalExitStats {
    double f = 0.0;     // hit-lower frequency
    double f_se = 0.0;
    double T = 0.0;     // mean exit time
    double T_se = 0.0;
    std::size_t n = 0;
    std::size_t truncated = 0;
};

struct EmpiricalValue {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::size_t truncated = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-batch generators derived from the master seed keep results identical
// however paths are grouped.
inline std::mt19937_64 batch_rng(std::uint64_t master, std::uint64_t batch) {
    return std::mt19937_64(splitmix64(master ^ splitmix64(batch + 1)));
}

struct ExitSample {
    bool hit_lower = false;
    bool truncated = false;
    double time = 0.0;
};

// Running mean and variance (Welford); exactly zero spread for constant
// samples, which degenerate policies rely on.
struct RunningStat {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double se() const {
        if (n < 2) return 0.0;
        double var = m2 / static_cast<double>(n);
        return var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    }
};

// One Euler path with Brownian-bridge crossing detection. Euler endpoints
// are exact in law for arithmetic Brownian motion, and the bridge crossing
// probability exp(-2 d0 d1 / (sigma^2 dt)) is exact conditional on the
// endpoints, so the exit side is unbiased; crossing times carry an O(dt)
// bias (hard crossings interpolated linearly, bridge crossings mid-step).
template <class Rng>
ExitSample simulate_one_exit(Rng& rng, std::normal_distribution<double>& normal,
                             std::uniform_real_distribution<double>& unif, double mu,
                             double sigma, double a, double b, double x0, double dt,
                             double max_time) {
    const double sq = sigma * std::sqrt(dt);
    const double s2dt = sigma * sigma * dt;
    double x = x0;
    double t = 0.0;
    ExitSample out;
    while (t < max_time) {
        double xn = x + mu * dt + sq * normal(rng);
        if (xn <= a) {
            double frac = (x - a) / std::max(x - xn, 1e-300);
            out.hit_lower = true;
            out.time = t + frac * dt;
            return out;
        }
        if (xn >= b) {
            double frac = (b - x) / std::max(xn - x, 1e-300);
            out.hit_lower = false;
            out.time = t + frac * dt;
            return out;
        }
        double pa = std::exp(-2.0 * (x - a) * (xn - a) / s2dt);
        if (unif(rng) < pa) {
            out.hit_lower = true;
            out.time = t + 0.5 * dt;
            return out;
        }
        double pb = std::exp(-2.0 * (b - x) * (b - xn) / s2dt);
        if (unif(rng) < pb) {
            out.hit_lower = false;
            out.time = t + 0.5 * dt;
            return out;
        }
        x = xn;
        t += dt;
    }
    out.truncated = true;
    out.time = max_time;
    return out;
}

constexpr std::size_t kBatch = 4096;

} // namespace detail

/**
 * Empirical exit statistics of a threshold policy under product state y.
 * Deterministic given (seed, config); rejects runs with more than 0.1%
 * truncated paths.
 */
inline EmpiricalExitStats simulate_exit(int y, const ThresholdPolicy& policy,
                                        const SimConfig& cfg, double sigma) {
    cfg.validate();
    if (!policy.interior_policy())
        raise(ErrorKind::PreconditionViolated, "simulate_exit needs an interior policy");
    const double mu = drift_of(y);
    const double a = policy.launch_at(), b = policy.abandon_at(), x0 = policy.start();

    std::size_t hits = 0, truncated = 0;
    detail::RunningStat time_stat;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t done = 0, batch = 0; done < cfg.n_paths; ++batch) {
        auto rng = detail::batch_rng(cfg.seed, batch);
        std::size_t m = std::min(detail::kBatch, cfg.n_paths - done);
        for (std::size_t j = 0; j < m; ++j) {
            auto s = detail::simulate_one_exit(rng, normal, unif, mu, sigma, a, b, x0,
                                               cfg.dt, cfg.max_time);
            if (s.truncated) ++truncated;
            if (s.hit_lower) ++hits;
            time_stat.add(s.time);
        }
        done += m;
    }
    const auto n = cfg.n_paths;
    if (truncated * 1000 > n)
        raise(ErrorKind::TruncationExceeded, "more than 0.1% of paths truncated");

    EmpiricalExitStats r;
    r.n = n;
    r.truncated = truncated;
    r.f = static_cast<double>(hits) / static_cast<double>(n);
    r.f_se = std::sqrt(std::max(r.f * (1.0 - r.f), 0.0) / static_cast<double>(n));
    r.T = time_stat.mean;
    r.T_se = time_stat.se();
    return r;
}

// Realized payoff average of d (pi - y psi(X_tau)) - c tau with y drawn per
// path with probability theta. Degenerate policies have no path noise beyond
// the type draw.
inline EmpiricalValue estimate_policy_value(FirmType theta, const ThresholdPolicy& policy,
                                            const Tariff& psi, const SimConfig& cfg,
                                            const ModelParams& params) {
    cfg.validate();
    detail::RunningStat stat;
    std::size_t truncated = 0;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t done = 0, batch = 0; done < cfg.n_paths; ++batch) {
        auto rng = detail::batch_rng(cfg.seed, batch);
        std::size_t m = std::min(detail::kBatch, cfg.n_paths - done);
        for (std::size_t j = 0; j < m; ++j) {
            int y = unif(rng) < theta.theta ? 1 : 0;
            double payoff = 0.0;
            if (policy.kind() == ThresholdPolicy::Kind::ImmediateLaunch) {
                payoff = params.pi - y * psi(policy.start());
            } else if (policy.kind() == ThresholdPolicy::Kind::ImmediateAbandon) {
                payoff = 0.0;
            } else {
                auto s = detail::simulate_one_exit(rng, normal, unif, drift_of(y),
                                                   params.sigma, policy.launch_at(),
                                                   policy.abandon_at(), policy.start(),
                                                   cfg.dt, cfg.max_time);
                if (s.truncated) ++truncated;
                double d = s.hit_lower ? 1.0 : 0.0;
                payoff = d * (params.pi - y * psi(policy.launch_at())) - params.c * s.time;
            }
            stat.add(payoff);
        }
        done += m;
    }
    const auto n = cfg.n_paths;
    if (truncated * 1000 > n)
        raise(ErrorKind::TruncationExceeded, "more than 0.1% of paths truncated");
    EmpiricalValue r;
    r.n = n;
    r.truncated = truncated;
    r.mean = stat.mean;
    r.se = stat.se();
    return r;
}

// Regulator flavor: d (beta - y L) - c tau.
inline EmpiricalValue estimate_regulator_value(FirmType theta,
                                               const ThresholdPolicy& policy,
                                               const SimConfig& cfg,
                                               const ModelParams& params) {
    cfg.validate();
    detail::RunningStat stat;
    std::size_t truncated = 0;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t done = 0, batch = 0; done < cfg.n_paths; ++batch) {
        auto rng = detail::batch_rng(cfg.seed, batch);
        std::size_t m = std::min(detail::kBatch, cfg.n_paths - done);
        for (std::size_t j = 0; j < m; ++j) {
            int y = unif(rng) < theta.theta ? 1 : 0;
            double payoff = 0.0;
            if (policy.kind() == ThresholdPolicy::Kind::ImmediateLaunch) {
                payoff = params.beta - y * params.L;
            } else if (policy.kind() == ThresholdPolicy::Kind::ImmediateAbandon) {
                payoff = 0.0;
            } else {
                auto s = detail::simulate_one_exit(rng, normal, unif, drift_of(y),
                                                   params.sigma, policy.launch_at(),
                                                   policy.abandon_at(), policy.start(),
                                                   cfg.dt, cfg.max_time);
                if (s.truncated) ++truncated;
                double d = s.hit_lower ? 1.0 : 0.0;
                payoff = d * (params.beta - y * params.L) - params.c * s.time;
            }
            stat.add(payoff);
        }
        done += m;
    }
    const auto n = cfg.n_paths;
    if (truncated * 1000 > n)
        raise(ErrorKind::TruncationExceeded, "more than 0.1% of paths truncated");
    EmpiricalValue r;
    r.n = n;
    r.truncated = truncated;
    r.mean = stat.mean;
    r.se = stat.se();
    return r;
}

} // namespace wald
