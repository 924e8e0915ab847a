#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wald/diffusion.hpp"
#include "wald/errors.hpp"
#include "wald/grid.hpp"
#include "wald/model.hpp"
#include "wald/policy.hpp"
#include "wald/solver.hpp"
#include "wald/tariff.hpp"

namespace wald {

// ============================================================================
// Benchmarks: first best vs uniform ceiling (recklessness)
// ============================================================================

struct BenchmarkRow {
    double theta = 0.0;
    double first_best_launch = 0.0;   // extended-real launch thresholds
    double first_best_abandon = 0.0;
    double ceiling_launch = 0.0;
    double ceiling_abandon = 0.0;
    double first_best_value = 0.0;
    double ceiling_value = 0.0;
};

struct BenchmarkThresholds {
    std::vector<BenchmarkRow> rows;
};

/**
 * First-best and uniform-ceiling thresholds per type, both via the
 * closed-form optimizer. Asserts the recklessness ranking strictly beyond
 * 2h for every type; a violation indicates either a solver defect or a
 * corner where the regulator's own problem is degenerate.
 */
inline BenchmarkThresholds benchmarks(const ModelParams& params, const TypeSpace& types,
                                      const SolveGrid& grid) {
    BenchmarkThresholds out;
    Tariff ceiling = Tariff::uniform(params.l);
    for (const FirmType& th : types) {
        auto fb = best_threshold_policy(th, regulator_launch_payoff(th, params), params,
                                        grid);
        auto ce = best_threshold_policy(th, firm_launch_payoff(th, ceiling, params),
                                        params, grid);
        BenchmarkRow row;
        row.theta = th.theta;
        row.first_best_launch = fb.policy.launch_level();
        row.first_best_abandon = fb.policy.interior_policy() ? fb.policy.abandon_at()
                                                             : fb.policy.start();
        row.ceiling_launch = ce.policy.launch_level();
        row.ceiling_abandon = ce.policy.interior_policy() ? ce.policy.abandon_at()
                                                          : ce.policy.start();
        row.first_best_value = fb.value;
        row.ceiling_value = ce.value;
        if (!(row.first_best_launch < row.ceiling_launch - 2.0 * grid.h()))
            raise(ErrorKind::RecklessnessViolation,
                  "first-best launch threshold not strictly below the ceiling one at theta=" +
                      std::to_string(th.theta));
        out.rows.push_back(row);
    }
    return out;
}

// ============================================================================
// Theorem-1 ceiling conversion
// ============================================================================

struct ConversionRow {
    double theta = 0.0;
    double designated_threshold = 0.0;
    double achieved_threshold = 0.0;
    double menu_value = 0.0;      // value of the type's own item
    double achieved_value = 0.0;  // best-response value under the full tariff
};

struct CeilingConversion {
    Tariff tariff;
    std::vector<ConversionRow> rows;
};

/**
 * Builds the ceiling tariff of a direct mechanism: the cap everywhere
 * except the menu's launch points, which keep their menu penalties. Then
 * verifies outcome equivalence type by type with the general solver: the
 * best response must launch at the designated point (within 2h) and gain
 * nothing beyond the own-item value (within pay_tol).
 */
inline CeilingConversion ceiling_conversion(const DirectMechanism& menu,
                                            const ModelParams& params,
                                            const SolveGrid& grid,
                                            double pay_tol = -1.0) {
    if (pay_tol <= 0.0) pay_tol = 1e-9 * params.pi;
    if (menu.empty())
        raise(ErrorKind::PreconditionViolated, "cannot convert an empty menu");

    std::vector<std::pair<double, double>> overrides;
    for (const auto& item : menu.items()) {
        bool seen = false;
        for (const auto& o : overrides) seen |= o.first == item.launch_threshold;
        if (!seen) overrides.emplace_back(item.launch_threshold, item.penalty);
    }
    CeilingConversion out;
    out.tariff = Tariff({}, {}, params.l, overrides);

    for (const auto& item : menu.items()) {
        ValueFunction vf = solve_general(item.theta, out.tariff, params, grid);
        StartBehavior behavior = policy_from_start(vf);
        Tariff own({}, {}, params.l, {{item.launch_threshold, item.penalty}});
        ValueFunction vf_own = solve_general(item.theta, own, params, grid);

        ConversionRow row;
        row.theta = item.theta;
        row.designated_threshold = item.launch_threshold;
        row.achieved_threshold = behavior.down_node;
        row.achieved_value = vf.value[grid.origin_index()];
        row.menu_value = vf_own.value[grid.origin_index()];
        if (behavior.down_action != Action::Launch ||
            !(std::abs(row.achieved_threshold - row.designated_threshold) <=
              2.0 * grid.h()))
            raise(ErrorKind::NotOutcomeEquivalent,
                  "type " + std::to_string(item.theta) +
                      " does not launch at its designated threshold");
        if (!(std::abs(row.achieved_value - row.menu_value) <= pay_tol))
            raise(ErrorKind::NotOutcomeEquivalent,
                  "type " + std::to_string(item.theta) +
                      " gains from another type's discount; menu was not IC");
        out.rows.push_back(row);
    }
    return out;
}

// ============================================================================
// Lemma-1 single crossing
// ============================================================================

struct SingleCrossingResult {
    bool theta_continues = false;        // weakly prefers information at x
    bool theta_prime_continues = false;  // at the same continuation pair
    bool holds = true;                   // the implication itself
    double a_term = 0.0;                 // f_b (pi - psi(a)) + psi(x) - c T_b
    double b_term = 0.0;                 // f_g pi - c T_g, always below pi
    double pair_launch = 0.0;
    double pair_abandon = 0.0;
};

/**
 * Evaluates the continuation-vs-launch comparison at evidence level x using
 * theta's optimal continuation pair, then re-evaluates the same pair for
 * theta_prime. Because the comparison is a convex combination of the same
 * two terms with a larger weight on the (necessarily larger) a-term, the
 * implication "theta continues => theta' continues" is exact arithmetic.
 */
inline SingleCrossingResult single_crossing_check(const Tariff& psi, double x,
                                                  FirmType theta, FirmType theta_prime,
                                                  const ModelParams& params,
                                                  const SolveGrid& grid) {
    if (!(theta.theta <= theta_prime.theta))
        raise(ErrorKind::PreconditionViolated, "requires theta <= theta_prime");
    if (!(grid.x_min() < x && x < grid.x_max()))
        raise(ErrorKind::PreconditionViolated, "x must be interior to the grid");

    const double p = posterior(theta, x, params.sigma);
    const double pp = posterior(theta_prime, x, params.sigma);
    const double stop_now = params.pi - p * psi(x);

    // theta's best continuation pair around x, closed form. Scale-function
    // terms are cached per node; the slow path guards custom grids whose
    // exponents would overflow the cache.
    const double q = 2.0 / (params.sigma * params.sigma);
    const double max_abs = std::max(std::abs(grid.x_min()), std::abs(grid.x_max()));
    const bool cached = q * max_abs < 350.0;
    std::vector<double> lows, highs, u_low, sp_lo, sm_lo, sp_hi, sm_hi;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double z = grid.node(i);
        if (z > grid.x_min() && z < x - 1e-12) {
            lows.push_back(z);
            u_low.push_back(params.pi - psi(z));
            if (cached) { sp_lo.push_back(std::exp(-q * z)); sm_lo.push_back(std::exp(q * z)); }
        } else if (z > x + 1e-12 && z < grid.x_max()) {
            highs.push_back(z);
            if (cached) { sp_hi.push_back(std::exp(-q * z)); sm_hi.push_back(std::exp(q * z)); }
        }
    }
    if (lows.empty() || highs.empty())
        raise(ErrorKind::GridTooSmall, "no continuation pairs available around x");

    const double sp_x = cached ? std::exp(-q * x) : 0.0;
    const double sm_x = cached ? std::exp(q * x) : 0.0;
    double best = -std::numeric_limits<double>::infinity();
    double best_a = lows[0], best_b = highs[0];
    for (std::size_t ia = 0; ia < lows.size(); ++ia) {
        double a = lows[ia], ua = u_low[ia];
        for (std::size_t ib = 0; ib < highs.size(); ++ib) {
            double b = highs[ib];
            double fb, fg;
            if (cached) {
                fb = (sp_x - sp_hi[ib]) / (sp_lo[ia] - sp_hi[ib]);
                fg = (sm_x - sm_hi[ib]) / (sm_lo[ia] - sm_hi[ib]);
            } else {
                fb = hit_lower_prob(x, a, b, +1.0, params.sigma);
                fg = hit_lower_prob(x, a, b, -1.0, params.sigma);
            }
            double Tb = a * fb + b * (1.0 - fb) - x;
            double Tg = -(a * fg + b * (1.0 - fg) - x);
            double v = p * (fb * ua - params.c * Tb) +
                       (1.0 - p) * (fg * params.pi - params.c * Tg);
            if (v > best) {
                best = v;
                best_a = a;
                best_b = b;
            }
        }
    }

    SingleCrossingResult r;
    r.pair_launch = best_a;
    r.pair_abandon = best_b;
    double fb = hit_lower_prob(x, best_a, best_b, +1.0, params.sigma);
    double fg = hit_lower_prob(x, best_a, best_b, -1.0, params.sigma);
    double Tb = expected_exit_time(x, best_a, best_b, +1.0, params.sigma);
    double Tg = expected_exit_time(x, best_a, best_b, -1.0, params.sigma);
    r.a_term = fb * (params.pi - psi(best_a)) + psi(x) - params.c * Tb;
    r.b_term = fg * params.pi - params.c * Tg;
    r.theta_continues = best >= stop_now - 1e-12 * params.pi;
    double lhs_prime = pp * r.a_term + (1.0 - pp) * r.b_term;
    r.theta_prime_continues = lhs_prime >= params.pi - 1e-10 * params.pi;
    r.holds = !r.theta_continues || r.theta_prime_continues;
    return r;
}

// ============================================================================
// Prop-2 monotonicity of launch thresholds in the prior
// ============================================================================

struct MonotonicityResult {
    std::vector<double> thetas;
    std::vector<double> launch_levels;  // extended-real region boundaries
    bool decreasing = true;
};

inline MonotonicityResult monotonicity_check(const Tariff& psi, const TypeSpace& types,
                                             const ModelParams& params,
                                             const SolveGrid& grid) {
    MonotonicityResult out;
    TypeSpace sorted = types;
    std::sort(sorted.begin(), sorted.end(),
              [](FirmType a, FirmType b) { return a.theta < b.theta; });
    for (const FirmType& th : sorted) {
        ValueFunction vf = solve_general(th, psi, params, grid);
        RegionThresholds region;
        try {
            region = extract_thresholds(vf);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NonIntervalRegion)
                raise(ErrorKind::InadmissibleTariff,
                      "best response is not of threshold form at theta=" +
                          std::to_string(th.theta));
            throw;
        }
        out.thetas.push_back(th.theta);
        out.launch_levels.push_back(region.launch_boundary);
    }
    for (std::size_t i = 1; i < out.launch_levels.size(); ++i)
        if (!(out.launch_levels[i] <= out.launch_levels[i - 1] + 2.0 * grid.h()))
            out.decreasing = false;
    return out;
}

// ============================================================================
// Monotone tariff synthesis for target launch thresholds
// ============================================================================

struct SynthesisRow {
    double theta = 0.0;
    double target_requested = 0.0;
    double target = 0.0;          // snapped to a grid node
    double achieved = 0.0;        // launch boundary of the verified best response
    double penalty = 0.0;         // tariff value at the target
    double residual = 0.0;        // indifference residual at the bisection root
    double alternative_value = 0.0;
    bool adjusted = false;        // whether a new segment was introduced
};

struct SynthesisReport {
    Tariff tariff;
    std::vector<SynthesisRow> rows;
    double max_deviation = 0.0;
    double nudge = 0.0;
    DirectMechanism menu;  // read-off (theta, target, penalty) menu
};

struct SynthesisOptions {
    double subsidy_floor_mult = -10.0;  // floor = mult * pi
    double nudge_mult = 1e-6;           // strict-preference margin, * pi
    double bisect_tol_mult = 1e-12;     // indifference residual target, * pi
};

/**
 * Builds a non-decreasing piecewise-constant tariff implementing decreasing
 * target launch thresholds, walking types from the smallest prior down the
 * evidence axis. Each step bisects the next segment value until the type is
 * indifferent between launching at its target and the best alternative
 * strictly above it (a launch-masked solve), then nudges the segment just
 * below the root so the grid best response prefers the target beyond the
 * solver's tie tolerance. Verified type by type with the general solver.
 */
inline SynthesisReport synthesize_monotone(const std::vector<std::pair<double, double>>& targets,
                                           const ModelParams& params, const SolveGrid& grid,
                                           const SynthesisOptions& opts = {}) {
    if (targets.empty())
        raise(ErrorKind::PreconditionViolated, "need at least one target");
    const double floor = opts.subsidy_floor_mult * params.pi;
    const double nudge = opts.nudge_mult * params.pi;
    const double bis_tol = opts.bisect_tol_mult * params.pi;

    // sort by type, snap targets, merge equal-target types
    struct Entry {
        double theta;
        double requested;
        std::size_t node;
        std::vector<double> merged_thetas;
    };
    std::vector<Entry> entries;
    {
        auto sorted = targets;
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [theta, x] : sorted) {
            FirmType t{theta};
            if (!entries.empty() && entries.back().theta == theta)
                raise(ErrorKind::PreconditionViolated, "duplicate type in targets");
            if (!grid.contains(x) || x > 0.0)
                raise(ErrorKind::PreconditionViolated,
                      "targets must lie on the grid at or below the start");
            std::size_t node = grid.nearest_index(x);
            if (!entries.empty() && entries.back().node == node) {
                // equal targets share a penalty; fold into one step
                entries.back().merged_thetas.push_back(theta);
                entries.back().theta = theta;  // keep the largest prior for the step
                continue;
            }
            if (!entries.empty() && grid.node(node) >= grid.node(entries.back().node))
                raise(ErrorKind::PreconditionViolated,
                      "targets must be decreasing in theta");
            entries.push_back({theta, x, node, {theta}});
        }
    }

    // ceiling responses bound the targets from below on the evidence axis
    Tariff ceiling = Tariff::uniform(params.l);
    for (const auto& e : entries) {
        ValueFunction vf = solve_general(e.theta, ceiling, params, grid);
        double bound = extract_thresholds(vf).launch_boundary;
        if (!(grid.node(e.node) <= bound + 1e-12))
            raise(ErrorKind::PreconditionViolated,
                  "target above the uniform-ceiling launch threshold at theta=" +
                      std::to_string(e.theta));
    }

    auto build_tariff = [&](const std::vector<std::pair<double, double>>& drops,
                            double extension) {
        // drops are (breakpoint, value) with descending breakpoints
        if (drops.empty()) return Tariff::uniform(params.l);
        std::vector<double> bps, vals;
        for (auto it = drops.rbegin(); it != drops.rend(); ++it) bps.push_back(it->first);
        for (std::size_t i = 0; i + 1 < drops.size(); ++i)
            vals.push_back(drops[drops.size() - 2 - i].second);
        vals.push_back(params.l);  // above the first breakpoint
        return Tariff(bps, vals, extension);
    };

    std::vector<std::pair<double, double>> drops;  // descending breakpoints
    double prev_level = params.l;
    SynthesisReport report;
    report.nudge = nudge;

    const std::size_t origin = grid.origin_index();
    for (const auto& e : entries) {
        const double target_x = grid.node(e.node);
        Tariff so_far = build_tariff(drops, prev_level);

        SynthesisRow row;
        row.theta = e.theta;
        row.target_requested = e.requested;
        row.target = target_x;

        // already implemented by the tariff built so far?
        ValueFunction current = solve_general(e.theta, so_far, params, grid);
        StartBehavior now = policy_from_start(current);
        if (now.down_action == Action::Launch && now.down_node == target_x) {
            row.penalty = so_far(target_x);
            row.residual = 0.0;
            row.adjusted = false;
            row.alternative_value = current.value[origin];
            report.rows.push_back(row);
            continue;
        }
        if (now.down_action == Action::Launch && now.down_node < target_x)
            raise(ErrorKind::BisectionFailed,
                  "tariff built so far already implements a deeper threshold than the "
                  "target at theta=" +
                      std::to_string(e.theta));

        // best alternative strictly above the target: launch-masked solve
        detail::GridProblem restr =
            detail::make_problem(e.theta, sample_tariff(so_far, grid), params, grid);
        for (std::size_t i = 0; i <= e.node; ++i) restr.stop_launch[i] = -1e300;
        SolveOptions restr_opts;
        restr_opts.check_boundaries = false;
        double alt_value =
            detail::solve_problem(restr, params, restr_opts).value[origin];
        row.alternative_value = alt_value;

        // value of launching at the target with a trial penalty, best abandon
        detail::GridProblem base =
            detail::make_problem(e.theta, sample_tariff(so_far, grid), params, grid);
        double p_at_target = posterior(e.theta, target_x, params.sigma);
        auto target_value = [&](double psi_k) {
            double stop = params.pi - p_at_target * psi_k;
            return detail::best_grid_abandon(base, e.node, stop, origin).value;
        };

        double g_hi = target_value(prev_level) - alt_value;
        double root = prev_level;
        if (g_hi < 0.0) {
            if (target_value(floor) - alt_value < 0.0)
                raise(ErrorKind::BisectionFailed,
                      "indifference point lies below the subsidy floor at theta=" +
                          std::to_string(e.theta));
            double lo = floor, hi = prev_level;
            for (int it = 0; it < 100; ++it) {
                double mid = 0.5 * (lo + hi);
                double g = target_value(mid) - alt_value;
                if (g >= 0.0) lo = mid; else hi = mid;
                if (std::abs(g) < bis_tol) break;
            }
            root = lo;  // the side that weakly prefers the target
            row.residual = target_value(root) - alt_value;
        } else {
            row.residual = g_hi;  // already weakly prefers the target
        }

        double level = std::max(floor, std::min(root, prev_level) - nudge);
        drops.emplace_back(target_x, level);
        prev_level = level;
        row.penalty = level;
        row.adjusted = true;
        report.rows.push_back(row);
    }

    report.tariff = build_tariff(drops, prev_level);
    report.tariff.validate_cap(params.l);
    if (!report.tariff.non_decreasing_segments())
        raise(ErrorKind::PreconditionViolated, "synthesized tariff lost monotonicity");

    // verification: every requested type's best response launches at its
    // target, including types merged into a shared step
    std::vector<MenuItem> items;
    std::vector<SynthesisRow> verified;
    for (const auto& e : entries) {
        const SynthesisRow* step = nullptr;
        for (const auto& row : report.rows)
            if (row.target == grid.node(e.node)) step = &row;
        for (double th : e.merged_thetas) {
            SynthesisRow row = *step;
            row.theta = th;
            ValueFunction vf = solve_general(th, report.tariff, params, grid);
            StartBehavior behavior = policy_from_start(vf);
            row.achieved = behavior.down_node;
            report.max_deviation =
                std::max(report.max_deviation, std::abs(row.achieved - row.target));
            if (behavior.down_action != Action::Launch ||
                !(std::abs(row.achieved - row.target) <= 2.0 * grid.h()))
                raise(ErrorKind::BisectionFailed,
                      "synthesis verification failed at theta=" + std::to_string(th));
            verified.push_back(row);
            items.push_back({th, row.target, report.tariff(row.target)});
        }
    }
    report.rows = std::move(verified);
    report.menu = DirectMechanism(items, params.l);
    return report;
}

// ============================================================================
// Prop-4 identifiability
// ============================================================================

struct IdentifiabilityCell {
    std::string label;
    std::vector<double> thetas;       // types choosing an action in this cell
    bool singleton = false;           // observable set is one evidence level
    double observable = 0.0;          // the level, when singleton
};

struct IdentifiabilityResult {
    bool identifiable = false;
    std::vector<IdentifiabilityCell> cells;
    std::optional<std::pair<double, double>> collision;  // colliding type pair
};

// Distinct launch thresholds partition the strategy space into per-type
// cells with singleton damage observables plus one residual cell; equal
// thresholds are reported as a collision instead.
inline IdentifiabilityResult identifiability_check(const DirectMechanism& menu) {
    IdentifiabilityResult out;
    const auto& items = menu.items();
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = i + 1; j < items.size(); ++j)
            if (items[i].launch_threshold == items[j].launch_threshold) {
                out.collision = {items[i].theta, items[j].theta};
                return out;
            }
    out.identifiable = true;
    for (const auto& item : items) {
        IdentifiabilityCell cell;
        cell.label = "A_" + std::to_string(item.theta);
        cell.thetas = {item.theta};
        cell.singleton = true;
        cell.observable = item.launch_threshold;
        out.cells.push_back(cell);
    }
    IdentifiabilityCell rest;
    rest.label = "A_0";
    rest.singleton = false;
    out.cells.push_back(rest);
    return out;
}

} // namespace wald
