#pragma once

#include <random>

#include "wald/model.hpp"

namespace wald::testing {

// Reference parameter set used across the suites.
inline ModelParams p0() { return validate_params(1.0, 0.05, 1.0, 1.2, 0.8, 2.0); }

// Same economy but with the liability cap above the firm's profit, so the
// firm acquires information under the uniform ceiling. The flow cost sits
// where the grid solver's discretization error stays well inside the
// tol_v + c dt budget.
inline ModelParams p_cap_above_profit() {
    return validate_params(1.0, 0.08, 1.0, 1.2, 1.2, 2.0);
}

// Random validated parameter set with an interior regulator problem in mind:
// beta < L and a small flow cost.
inline ModelParams random_params(std::mt19937_64& rng, bool allow_cap_above_profit = true) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
        double sigma = 0.8 + 0.6 * u(rng);
        double pi = 0.7 + 0.8 * u(rng);
        double beta = pi * (0.7 + 0.8 * u(rng));
        double L = beta * (1.6 + 1.4 * u(rng));
        double hi = std::min(allow_cap_above_profit ? 1.6 * pi : 0.95 * pi,
                             0.95 * L * pi / beta);
        double lo = 0.25 * pi;
        if (hi <= lo) continue;
        double l = lo + (hi - lo) * u(rng);
        double c = (0.015 + 0.035 * u(rng)) * std::min(pi, beta);
        if (!(l < L) || !(l * beta < L * pi)) continue;
        return validate_params(sigma, c, pi, beta, l, L);
    }
}

} // namespace wald::testing
