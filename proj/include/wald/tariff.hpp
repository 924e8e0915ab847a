#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "wald/errors.hpp"

namespace wald {

// ============================================================================
// Tariffs: evidence level -> penalty paid on damage
// ============================================================================

// Piecewise-constant tariff with isolated point overrides.
//
// Segment convention (left-open, right-closed):
//   x <= breakpoints[0]                  -> default_value
//   breakpoints[i] < x <= breakpoints[i+1] -> segment_values[i]
//   x > breakpoints.back()               -> segment_values.back()
// so the value AT a breakpoint belongs to the segment below it. Point
// overrides win over segments. Every value must stay at or below the
// liability cap; negative values are subsidies.
class Tariff {
public:
    Tariff() = default;

    static Tariff uniform(double value) {
        Tariff t;
        t.default_value_ = value;
        return t;
    }

    Tariff(std::vector<double> breakpoints, std::vector<double> segment_values,
           double default_value,
           std::vector<std::pair<double, double>> point_overrides = {})
        : breakpoints_(std::move(breakpoints)),
          segment_values_(std::move(segment_values)),
          overrides_(std::move(point_overrides)),
          default_value_(default_value) {
        if (segment_values_.size() != breakpoints_.size())
            raise(ErrorKind::MalformedInput,
                  "tariff needs one segment value per breakpoint");
        for (std::size_t i = 1; i < breakpoints_.size(); ++i)
            if (!(breakpoints_[i - 1] < breakpoints_[i]))
                raise(ErrorKind::MalformedInput,
                      "tariff breakpoints must be strictly increasing");
        std::sort(overrides_.begin(), overrides_.end());
        for (std::size_t i = 1; i < overrides_.size(); ++i)
            if (overrides_[i - 1].first == overrides_[i].first)
                raise(ErrorKind::MalformedInput, "tariff override points must be distinct");
    }

    // Total evaluation: overrides, then segment lookup, default below.
    double operator()(double x) const {
        auto it = std::lower_bound(
            overrides_.begin(), overrides_.end(), x,
            [](const std::pair<double, double>& o, double v) { return o.first < v; });
        if (it != overrides_.end() && it->first == x) return it->second;
        if (breakpoints_.empty() || x <= breakpoints_.front()) return default_value_;
        // segment_values[i] covers (breakpoints[i], breakpoints[i+1]], the
        // last one extends to +infinity
        auto bp = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
        std::size_t idx = static_cast<std::size_t>(bp - breakpoints_.begin()) - 1;
        return segment_values_[idx];
    }

    // Throws CapViolation if any stored value exceeds the cap.
    void validate_cap(double cap) const {
        auto check = [&](double v) {
            if (!(v <= cap) || !std::isfinite(v))
                raise(ErrorKind::CapViolation, "tariff value exceeds the liability cap");
        };
        check(default_value_);
        for (double v : segment_values_) check(v);
        for (const auto& [x, v] : overrides_) {
            (void)x;
            check(v);
        }
    }

    bool is_constant() const { return breakpoints_.empty() && overrides_.empty(); }

    // Non-decreasing in x across segments and the default, ignoring overrides.
    bool non_decreasing_segments() const {
        double prev = default_value_;
        for (double v : segment_values_) {
            if (v < prev - 1e-15) return false;
            prev = v;
        }
        return true;
    }

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& segment_values() const { return segment_values_; }
    const std::vector<std::pair<double, double>>& overrides() const { return overrides_; }
    double default_value() const { return default_value_; }

private:
    std::vector<double> breakpoints_;
    std::vector<double> segment_values_;
    std::vector<std::pair<double, double>> overrides_;  // sorted by x
    double default_value_ = 0.0;
};

inline double tariff_eval(const Tariff& psi, double x) { return psi(x); }

} // namespace wald
