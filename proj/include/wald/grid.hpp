#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "wald/diffusion.hpp"
#include "wald/errors.hpp"
#include "wald/model.hpp"

namespace wald {

// Uniform evidence grid for the general solver. The origin is always a
// node (bounds are snapped outward to multiples of h), so policies started
// at X_0 = 0 evaluate at a node.
class SolveGrid {
public:
    static SolveGrid make(double x_min, double x_max, double h) {
        if (!(h > 0.0)) raise(ErrorKind::PreconditionViolated, "grid step must be positive");
        if (!(x_min < 0.0 && 0.0 < x_max))
            raise(ErrorKind::PreconditionViolated, "grid must bracket the start state 0");
        auto steps_up = [&](double v) {
            return static_cast<std::size_t>(std::ceil(v / h - 1e-9));
        };
        std::size_t m_lo = std::max<std::size_t>(1, steps_up(-x_min));
        std::size_t m_hi = std::max<std::size_t>(1, steps_up(x_max));
        return SolveGrid(m_lo, m_hi, h);
    }

    double h() const { return h_; }
    double x_min() const { return -static_cast<double>(m_lo_) * h_; }
    double x_max() const { return static_cast<double>(m_hi_) * h_; }
    std::size_t size() const { return m_lo_ + m_hi_ + 1; }
    std::size_t origin_index() const { return m_lo_; }

    double node(std::size_t i) const {
        return (static_cast<double>(i) - static_cast<double>(m_lo_)) * h_;
    }

    std::size_t nearest_index(double x) const {
        double r = (x - x_min()) / h_;
        if (r < 0.0) r = 0.0;
        double top = static_cast<double>(size() - 1);
        if (r > top) r = top;
        return static_cast<std::size_t>(std::llround(r));
    }

    bool contains(double x) const {
        return x >= x_min() - 1e-12 && x <= x_max() + 1e-12;
    }

    SolveGrid widened(double factor = 1.5) const {
        return make(x_min() * factor, x_max() * factor, h_);
    }

    std::vector<double> nodes() const {
        std::vector<double> xs(size());
        for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = node(i);
        return xs;
    }

    // h <= sigma^2 keeps the random-walk step probabilities in [0,1].
    void validate_for(const ModelParams& params) const {
        if (!(h_ <= params.sigma * params.sigma + 1e-12))
            raise(ErrorKind::PreconditionViolated,
                  "grid step must not exceed sigma^2");
    }

private:
    SolveGrid(std::size_t m_lo, std::size_t m_hi, double h)
        : m_lo_(m_lo), m_hi_(m_hi), h_(h) {}

    std::size_t m_lo_;
    std::size_t m_hi_;
    double h_;
};

inline double default_grid_step(const ModelParams& params) {
    return params.sigma * params.sigma / 20.0;
}

// Default solve region: wide enough that every non-degenerate type's belief
// reaches 1e-6 / 1-1e-6 at the boundaries, with a fallback width for
// degenerate-only type sets.
inline SolveGrid default_grid(const ModelParams& params, const TypeSpace& types,
                              double h = 0.0) {
    if (h <= 0.0) h = default_grid_step(params);
    double s2 = params.sigma * params.sigma;
    double lo = -4.0 * std::max(s2, 1.0);
    double hi = -lo;
    constexpr double eps = 1e-6;
    for (const FirmType& t : types) {
        if (t.degenerate()) continue;
        lo = std::min(lo, evidence_for_posterior(t, eps, params.sigma));
        hi = std::max(hi, evidence_for_posterior(t, 1.0 - eps, params.sigma));
    }
    return SolveGrid::make(lo - h, hi + h, h);
}

} // namespace wald
