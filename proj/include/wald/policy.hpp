#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "wald/errors.hpp"
#include "wald/model.hpp"

namespace wald {

// ============================================================================
// Threshold policies and direct mechanisms
// ============================================================================

// Two-threshold stopping rule anchored at a start state: launch when X
// first drops to launch_at, abandon when it first rises to abandon_at.
// Degenerate immediate actions are tagged explicitly because the pure
// (launch_at, abandon_at, start) triple cannot distinguish "launch now"
// from "abandon now" when both thresholds sit at the start.
class ThresholdPolicy {
public:
    enum class Kind { Interior, ImmediateLaunch, ImmediateAbandon };

    static ThresholdPolicy interior(double launch_at, double abandon_at,
                                    double start = 0.0) {
        if (!(launch_at < start && start < abandon_at))
            raise(ErrorKind::PreconditionViolated,
                  "interior policy requires launch_at < start < abandon_at");
        return ThresholdPolicy(Kind::Interior, launch_at, abandon_at, start);
    }

    static ThresholdPolicy immediate_launch(double start = 0.0) {
        return ThresholdPolicy(Kind::ImmediateLaunch, start, start, start);
    }

    static ThresholdPolicy immediate_abandon(double start = 0.0) {
        return ThresholdPolicy(Kind::ImmediateAbandon, start, start, start);
    }

    Kind kind() const { return kind_; }
    bool interior_policy() const { return kind_ == Kind::Interior; }
    double launch_at() const { return launch_at_; }
    double abandon_at() const { return abandon_at_; }
    double start() const { return start_; }

    // Launch threshold on the extended real line, for monotone-comparative
    // checks: a policy that never launches has threshold -infinity.
    double launch_level() const {
        if (kind_ == Kind::ImmediateAbandon)
            return -std::numeric_limits<double>::infinity();
        return launch_at_;
    }

private:
    ThresholdPolicy(Kind k, double a, double b, double s)
        : kind_(k), launch_at_(a), abandon_at_(b), start_(s) {}

    Kind kind_;
    double launch_at_;
    double abandon_at_;
    double start_;
};

// One menu entry of a direct liability mechanism in reduced form.
struct MenuItem {
    double theta = 0.0;              // reporting type
    double launch_threshold = 0.0;   // evidence level at which the type launches
    double penalty = 0.0;            // penalty charged at that level on damage
};

// Finite menu type -> (launch threshold, penalty-on-damage). Types that
// share a launch threshold must share a penalty, otherwise one of them
// would misreport.
class DirectMechanism {
public:
    DirectMechanism() = default;

    explicit DirectMechanism(std::vector<MenuItem> items, double cap)
        : items_(std::move(items)) {
        for (const auto& it : items_) {
            FirmType{it.theta};  // range check
            if (!(it.penalty <= cap))
                raise(ErrorKind::CapViolation, "menu penalty exceeds the liability cap");
        }
        for (std::size_t i = 0; i < items_.size(); ++i)
            for (std::size_t j = i + 1; j < items_.size(); ++j)
                if (items_[i].launch_threshold == items_[j].launch_threshold &&
                    items_[i].penalty != items_[j].penalty)
                    raise(ErrorKind::InconsistentMenu,
                          "types sharing a launch threshold must share a penalty");
    }

    const std::vector<MenuItem>& items() const { return items_; }
    bool empty() const { return items_.empty(); }

private:
    std::vector<MenuItem> items_;
};

} // namespace wald
