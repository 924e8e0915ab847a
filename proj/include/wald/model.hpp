#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wald/errors.hpp"

namespace wald {

// ============================================================================
// Model primitives
// ============================================================================

// Economic and signal primitives of the liability model.
//
//   sigma : signal volatility (evidence units per sqrt(time))
//   c     : flow cost of acquiring information
//   pi    : firm profit from a launch
//   beta  : social benefit from a launch
//   l     : liability cap (max penalty the firm can be charged)
//   L     : social damage if a risky product is launched
//
// The ordered cost-benefit ratio condition l/pi < L/beta must hold; it
// is equivalent to k = pi - beta*l/L > 0. Use validate_params() to
// construct; k is attached there.
struct ModelParams {
    double sigma = 0.0;
    double c = 0.0;
    double pi = 0.0;
    double beta = 0.0;
    double l = 0.0;
    double L = 0.0;
    double k = std::numeric_limits<double>::quiet_NaN();
};

inline ModelParams validate_params(const ModelParams& raw) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            raise(ErrorKind::NonPositiveParam,
                  std::string(name) + " must be strictly positive and finite");
    };
    positive(raw.sigma, "sigma");
    positive(raw.c, "c");
    positive(raw.pi, "pi");
    positive(raw.beta, "beta");
    positive(raw.l, "l");
    positive(raw.L, "L");
    if (!(raw.l < raw.L))
        raise(ErrorKind::CapViolation, "liability cap l must be below social damage L");
    // l/pi < L/beta, compared cross-multiplied to avoid division.
    if (!(raw.l * raw.beta < raw.L * raw.pi))
        raise(ErrorKind::AssumptionViolation,
              "ordered cost-benefit ratios require l/pi < L/beta");
    ModelParams p = raw;
    p.k = p.pi - p.beta * p.l / p.L;
    if (!(p.k > 0.0))
        raise(ErrorKind::AssumptionViolation, "k = pi - beta*l/L must be positive");
    return p;
}

inline ModelParams validate_params(double sigma, double c, double pi, double beta,
                                   double l, double L) {
    ModelParams raw;
    raw.sigma = sigma;
    raw.c = c;
    raw.pi = pi;
    raw.beta = beta;
    raw.l = l;
    raw.L = L;
    return validate_params(raw);
}

// A firm type: the prior probability that the product is risky (y = 1).
struct FirmType {
    double theta = 0.0;

    FirmType() = default;
    FirmType(double t) : theta(t) {  // NOLINT: implicit by design
        if (!(t >= 0.0 && t <= 1.0))
            raise(ErrorKind::PreconditionViolated, "theta must lie in [0,1]");
    }

    bool degenerate() const { return theta == 0.0 || theta == 1.0; }
};

using TypeSpace = std::vector<FirmType>;

} // namespace wald
