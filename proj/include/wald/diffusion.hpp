#pragma once

#include <cmath>

#include "wald/errors.hpp"
#include "wald/model.hpp"
#include "wald/policy.hpp"

namespace wald {

// ============================================================================
// Closed-form belief and first-passage analytics for
//   X_t = (-1 + 2y) t + sigma B_t
// Drift convention: y = 1 (damage) => +1, y = 0 (safe) => -1.
// Superscripts: b <-> y = 1, g <-> y = 0.
// ============================================================================

inline double drift_of(int y) { return y == 1 ? 1.0 : -1.0; }

/**
 * Posterior probability of y = 1 at evidence level x given prior theta.
 *
 * The likelihood ratio of the two drifts over a path depends on the path
 * only through its endpoint: dP(+1)/dP(-1) = exp(2x/sigma^2). Hence
 *   p(x) = theta e^{2x/s^2} / (theta e^{2x/s^2} + 1 - theta),
 * evaluated in whichever tail-stable form applies. Degenerate priors are
 * fixed points.
 */
inline double posterior(FirmType theta, double x, double sigma) {
    double t = theta.theta;
    if (t == 0.0 || t == 1.0) return t;
    double e = 2.0 * x / (sigma * sigma);
    if (e >= 0.0) {
        // p = 1 / (1 + (1-t)/t * exp(-e))
        return 1.0 / (1.0 + (1.0 - t) / t * std::exp(-e));
    }
    double E = std::exp(e);
    return t * E / (t * E + (1.0 - t));
}

// Evidence level where posterior(theta, x) = q, for theta, q in (0,1).
inline double evidence_for_posterior(FirmType theta, double q, double sigma) {
    double t = theta.theta;
    return 0.5 * sigma * sigma * (std::log(q / (1.0 - q)) - std::log(t / (1.0 - t)));
}

/**
 * Probability that X started at x exits (a, b) through the lower boundary,
 * for constant drift mu and volatility sigma.
 *
 * With the scale function s(z) = exp(-2 mu z / sigma^2),
 *   f = (s(x) - s(b)) / (s(a) - s(b)) = expm1(q(b-x)) / expm1(q(b-a)),
 * q = 2 mu / sigma^2. The expm1 form is exact; a factored all-negative-
 * exponent branch avoids overflow when q(b-a) is large.
 */
inline double hit_lower_prob(double x, double a, double b, double mu, double sigma) {
    if (!(a < x && x < b))
        raise(ErrorKind::DomainError, "hit_lower_prob requires a < x < b");
    if (mu == 0.0)
        raise(ErrorKind::DomainError, "drift must be nonzero");
    double q = 2.0 * mu / (sigma * sigma);
    if (q * (b - a) > 700.0) {
        double d = std::exp(-q * (b - a));
        return (std::exp(-q * (x - a)) - d) / (1.0 - d);
    }
    if (q * (b - a) < -700.0) {
        // mirror: 1 - hit_upper of the reflected problem
        double d = std::exp(q * (b - a));
        return 1.0 - (std::exp(q * (b - x)) - d) / (1.0 - d);
    }
    return std::expm1(q * (b - x)) / std::expm1(q * (b - a));
}

/**
 * Expected two-sided exit time from (a, b) started at x, drift mu != 0.
 *
 * Optional sampling on X_t - mu t gives E[tau] = (E[X_tau] - x)/mu with
 * E[X_tau] = a f + b (1 - f).
 */
inline double expected_exit_time(double x, double a, double b, double mu,
                                 double sigma) {
    double f = hit_lower_prob(x, a, b, mu, sigma);
    double t = (a * f + b * (1.0 - f) - x) / mu;
    return t < 0.0 ? 0.0 : t;  // clamp -0.0 / rounding dust
}

// Conditional exit statistics of a threshold policy: probability of hitting
// the launch boundary first and expected exit time, per product state.
struct ExitStats {
    double f_g = 0.0;  // P(hit launch boundary first | y = 0)
    double f_b = 0.0;  // P(hit launch boundary first | y = 1)
    double T_g = 0.0;  // E[exit time | y = 0]
    double T_b = 0.0;  // E[exit time | y = 1]
};

// The four quantities are conditional on the product state, so they do not
// depend on the prior. Degenerate policies exit instantly.
inline ExitStats exit_stats(const ThresholdPolicy& policy, double sigma) {
    ExitStats s;
    if (!policy.interior_policy()) {
        bool launch = policy.kind() == ThresholdPolicy::Kind::ImmediateLaunch;
        s.f_g = s.f_b = launch ? 1.0 : 0.0;
        return s;
    }
    double x = policy.start(), a = policy.launch_at(), b = policy.abandon_at();
    s.f_g = hit_lower_prob(x, a, b, -1.0, sigma);
    s.f_b = hit_lower_prob(x, a, b, +1.0, sigma);
    s.T_g = expected_exit_time(x, a, b, -1.0, sigma);
    s.T_b = expected_exit_time(x, a, b, +1.0, sigma);
    return s;
}

} // namespace wald
