#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wald/diffusion.hpp"
#include "wald/errors.hpp"
#include "wald/grid.hpp"
#include "wald/model.hpp"
#include "wald/policy.hpp"
#include "wald/tariff.hpp"

namespace wald {

// ============================================================================
// Closed-form policy evaluation
// ============================================================================

/**
 * Value of a threshold policy for a generic launch-payoff map u(x).
 *
 * The posterior upon first hitting the launch boundary equals p(launch_at)
 * regardless of the path, so the mixture form
 *   V = P(hit launch first) u(launch_at) - c E[tau]
 * agrees with the per-state decomposition used by firm_policy_value.
 */
template <class PayoffMap>
double threshold_policy_value(FirmType theta, const ThresholdPolicy& policy,
                              PayoffMap&& launch_payoff, const ModelParams& params) {
    switch (policy.kind()) {
        case ThresholdPolicy::Kind::ImmediateLaunch:
            return launch_payoff(policy.start());
        case ThresholdPolicy::Kind::ImmediateAbandon:
            return 0.0;
        case ThresholdPolicy::Kind::Interior:
            break;
    }
    double p = posterior(theta, policy.start(), params.sigma);
    ExitStats s = exit_stats(policy, params.sigma);
    double hit = p * s.f_b + (1.0 - p) * s.f_g;
    double time = p * s.T_b + (1.0 - p) * s.T_g;
    return hit * launch_payoff(policy.launch_at()) - params.c * time;
}

// Firm's expected payoff of a threshold policy under tariff psi:
//   p [f_b (pi - psi(x_)) - c T_b] + (1-p) [f_g pi - c T_g],
// p = posterior at the start. Immediate launch pays pi - p psi(start),
// immediate abandonment is normalized to zero.
inline double firm_policy_value(FirmType theta, const ThresholdPolicy& policy,
                                const Tariff& psi, const ModelParams& params) {
    double p = posterior(theta, policy.start(), params.sigma);
    switch (policy.kind()) {
        case ThresholdPolicy::Kind::ImmediateLaunch:
            return params.pi - p * psi(policy.start());
        case ThresholdPolicy::Kind::ImmediateAbandon:
            return 0.0;
        case ThresholdPolicy::Kind::Interior:
            break;
    }
    ExitStats s = exit_stats(policy, params.sigma);
    return p * (s.f_b * (params.pi - psi(policy.launch_at())) - params.c * s.T_b) +
           (1.0 - p) * (s.f_g * params.pi - params.c * s.T_g);
}

// Regulator's payoff: beta, L in place of pi, psi.
inline double regulator_policy_value(FirmType theta, const ThresholdPolicy& policy,
                                     const ModelParams& params) {
    double p = posterior(theta, policy.start(), params.sigma);
    switch (policy.kind()) {
        case ThresholdPolicy::Kind::ImmediateLaunch:
            return params.beta - p * params.L;
        case ThresholdPolicy::Kind::ImmediateAbandon:
            return 0.0;
        case ThresholdPolicy::Kind::Interior:
            break;
    }
    ExitStats s = exit_stats(policy, params.sigma);
    return p * (s.f_b * (params.beta - params.L) - params.c * s.T_b) +
           (1.0 - p) * (s.f_g * params.beta - params.c * s.T_g);
}

// Launch-payoff maps of the two players.
inline std::function<double(double)> firm_launch_payoff(FirmType theta, Tariff psi,
                                                        const ModelParams& params) {
    double sigma = params.sigma, pi = params.pi;
    return [theta, psi = std::move(psi), sigma, pi](double x) {
        return pi - posterior(theta, x, sigma) * psi(x);
    };
}

inline std::function<double(double)> regulator_launch_payoff(FirmType theta,
                                                             const ModelParams& params) {
    double sigma = params.sigma, beta = params.beta, L = params.L;
    return [theta, sigma, beta, L](double x) {
        return beta - posterior(theta, x, sigma) * L;
    };
}

// ============================================================================
// Best threshold policy (closed-form grid search + local refinement)
// ============================================================================

struct BestPolicyResult {
    ThresholdPolicy policy = ThresholdPolicy::immediate_abandon();
    double value = 0.0;
};

namespace detail {

// Mixture-form value with cached scale-function terms.
struct PairEvaluator {
    double p;       // belief at the start
    double c;
    double sigma;
    double start;
    double q;       // 2 / sigma^2

    double value(double a, double b, double ua) const {
        double fb = hit_lower_prob(start, a, b, +1.0, sigma);
        double fg = hit_lower_prob(start, a, b, -1.0, sigma);
        double Tb = (a * fb + b * (1.0 - fb) - start);
        double Tg = -(a * fg + b * (1.0 - fg) - start);
        double hit = p * fb + (1.0 - p) * fg;
        double time = p * Tb + (1.0 - p) * Tg;
        return hit * ua - c * time;
    }
};

} // namespace detail

struct BestPolicyOptions {
    double start = 0.0;
    bool refine = true;       // local continuous refinement of the grid argmax
    double tie_tol = -1.0;    // defaults to 1e-9 * pi
    double refine_tol = -1.0; // defaults to h / 10
};

/**
 * Maximizes the closed-form policy value over two-threshold policies
 * anchored at the start state, including the immediate actions. The grid
 * argmax is refined by golden-section search in each threshold to tol_x.
 * Ties go to the smaller continuation interval. Throws GridTooSmall when
 * the argmax sits on the outermost candidate nodes.
 */
template <class PayoffMap>
BestPolicyResult best_threshold_policy(FirmType theta, PayoffMap&& launch_payoff,
                                       const ModelParams& params, const SolveGrid& grid,
                                       const BestPolicyOptions& opts = {}) {
    const double start = opts.start;
    if (!grid.contains(start) || !(grid.x_min() < start && start < grid.x_max()))
        raise(ErrorKind::PreconditionViolated, "start must be interior to the grid");
    const double tie_tol = opts.tie_tol > 0.0 ? opts.tie_tol : 1e-9 * params.pi;
    const double p0 = posterior(theta, start, params.sigma);
    detail::PairEvaluator ev{p0, params.c, params.sigma, start,
                             2.0 / (params.sigma * params.sigma)};

    // candidate nodes strictly below / above the start
    std::vector<double> lows, highs;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid.node(i);
        if (x > grid.x_min() + 0.5 * grid.h() && x < start - 1e-12) lows.push_back(x);
        if (x > start + 1e-12 && x < grid.x_max() - 0.5 * grid.h()) highs.push_back(x);
    }
    if (lows.empty() || highs.empty())
        raise(ErrorKind::GridTooSmall, "no interior candidate thresholds around the start");

    std::vector<double> u_at(lows.size());
    for (std::size_t i = 0; i < lows.size(); ++i) u_at[i] = launch_payoff(lows[i]);

    double best_launch = launch_payoff(start);
    bool immediate_launch_best = best_launch >= 0.0;
    double best_value = std::max(best_launch, 0.0);
    double best_width = 0.0;
    std::ptrdiff_t best_a = -1, best_b = -1;

    for (std::size_t ia = 0; ia < lows.size(); ++ia) {
        for (std::size_t ib = 0; ib < highs.size(); ++ib) {
            double v = ev.value(lows[ia], highs[ib], u_at[ia]);
            double w = highs[ib] - lows[ia];
            if (v > best_value + tie_tol ||
                (v > best_value - tie_tol && best_a >= 0 && w < best_width)) {
                best_value = v;
                best_width = w;
                best_a = static_cast<std::ptrdiff_t>(ia);
                best_b = static_cast<std::ptrdiff_t>(ib);
            }
        }
    }

    if (best_a < 0) {
        BestPolicyResult r;
        r.policy = immediate_launch_best ? ThresholdPolicy::immediate_launch(start)
                                         : ThresholdPolicy::immediate_abandon(start);
        r.value = immediate_launch_best ? best_launch : 0.0;
        return r;
    }

    double a = lows[static_cast<std::size_t>(best_a)];
    double b = highs[static_cast<std::size_t>(best_b)];
    if (best_a == 0 || best_b == static_cast<std::ptrdiff_t>(highs.size()) - 1)
        raise(ErrorKind::GridTooSmall, "optimal threshold pair touches the grid boundary");

    if (opts.refine) {
        const double h = grid.h();
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double tol = opts.refine_tol > 0.0 ? opts.refine_tol : h / 10.0;
        for (int round = 0; round < 2; ++round) {
            // refine the launch threshold holding b
            double lo = std::max(a - h, grid.x_min() + 1e-9);
            double hi = std::min(a + h, start - 1e-9);
            while (hi - lo > tol * 1e-3) {
                double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
                if (ev.value(m1, b, launch_payoff(m1)) >= ev.value(m2, b, launch_payoff(m2)))
                    hi = m2;
                else
                    lo = m1;
            }
            a = 0.5 * (lo + hi);
            // refine the abandon threshold holding a
            double ua = launch_payoff(a);
            lo = std::max(b - h, start + 1e-9);
            hi = std::min(b + h, grid.x_max() - 1e-9);
            while (hi - lo > tol * 1e-3) {
                double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
                if (ev.value(a, m1, ua) >= ev.value(a, m2, ua)) hi = m2;
                else lo = m1;
            }
            b = 0.5 * (lo + hi);
        }
        best_value = ev.value(a, b, launch_payoff(a));
    }

    BestPolicyResult r;
    r.policy = ThresholdPolicy::interior(a, b, start);
    r.value = best_value;
    return r;
}

// ============================================================================
// General solver: value iteration on the subjective random walk
// ============================================================================

enum class Action : std::uint8_t { Launch, Abandon, Continue };

struct ValueFunction {
    SolveGrid grid = SolveGrid::make(-1.0, 1.0, 0.5);
    std::vector<double> value;
    std::vector<Action> action;
    std::vector<double> stop_launch;  // launch payoff per node (as solved)
    std::size_t sweeps = 0;
};

struct SolveOptions {
    double tol_v = -1.0;           // defaults to 1e-9 * pi
    double tie_tol = -1.0;         // defaults to 1e-9 * pi
    std::size_t max_sweeps = 400000;
    bool check_boundaries = true;  // raise GridTooSmall on boundary Continue
};

namespace detail {

// Node-level description of a grid stopping problem. Launch can be masked
// per node (restricted solves used by the tariff synthesis).
struct GridProblem {
    SolveGrid grid = SolveGrid::make(-1.0, 1.0, 0.5);
    std::vector<double> stop_launch;  // -infinity where launch is masked
    std::vector<double> p_up;
    double dt = 0.0;
    double c = 0.0;
};

inline GridProblem make_problem(FirmType theta, const std::vector<double>& psi_nodes,
                                const ModelParams& params, const SolveGrid& grid) {
    grid.validate_for(params);
    GridProblem pr;
    pr.grid = grid;
    pr.dt = grid.h() * grid.h() / (params.sigma * params.sigma);
    pr.c = params.c;
    const std::size_t n = grid.size();
    pr.stop_launch.resize(n);
    pr.p_up.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = posterior(theta, grid.node(i), params.sigma);
        double mu = 2.0 * p - 1.0;
        pr.p_up[i] = 0.5 * (1.0 + mu * grid.h() / (params.sigma * params.sigma));
        pr.stop_launch[i] = params.pi - p * psi_nodes[i];
    }
    return pr;
}

// Exact value of the policy described by the action labels: tridiagonal
// solve over each maximal Continue block with its stop values as boundary
// data. Removes the value-iteration tolerance from reported values.
inline void evaluate_labels(const GridProblem& pr, const std::vector<Action>& act,
                            std::vector<double>& W) {
    const std::size_t n = pr.grid.size();
    for (std::size_t i = 0; i < n; ++i)
        if (act[i] != Action::Continue)
            W[i] = act[i] == Action::Launch ? pr.stop_launch[i] : 0.0;
    std::size_t i = 0;
    while (i < n) {
        if (act[i] != Action::Continue) { ++i; continue; }
        std::size_t lo = i;
        while (i < n && act[i] == Action::Continue) ++i;
        std::size_t hi = i - 1;  // continue block [lo, hi]; both neighbors stop
        // Thomas algorithm on W[j] - pu W[j+1] - pd W[j-1] = -c dt with
        // Dirichlet data W[lo-1], W[hi+1]. Forward pass yields
        // W[lo+j] = dp[j] + cp[j] W[lo+j+1].
        std::size_t m = hi - lo + 1;
        std::vector<double> cp(m), dp(m);
        for (std::size_t j = 0; j < m; ++j) {
            double pu = pr.p_up[lo + j], pd = 1.0 - pu;
            double rhs = -pr.c * pr.dt;
            if (j == 0) rhs += pd * W[lo - 1];
            if (j == m - 1) rhs += pu * W[hi + 1];
            double denom = (j == 0) ? 1.0 : 1.0 - pd * cp[j - 1];
            cp[j] = (j == m - 1) ? 0.0 : pu / denom;
            dp[j] = (j == 0) ? rhs : (rhs + pd * dp[j - 1]) / denom;
        }
        W[hi] = dp[m - 1];
        for (std::size_t j = m - 1; j-- > 0;) W[lo + j] = dp[j] + cp[j] * W[lo + j + 1];
    }
}

inline std::vector<Action> label_actions(const GridProblem& pr,
                                         const std::vector<double>& W, double tie_tol) {
    const std::size_t n = pr.grid.size();
    std::vector<Action> act(n);
    for (std::size_t i = 0; i < n; ++i) {
        double stop_l = pr.stop_launch[i];
        double stop = std::max(stop_l, 0.0);
        if (i == 0 || i == n - 1) {
            act[i] = stop_l >= 0.0 ? Action::Launch : Action::Abandon;
            continue;
        }
        double cont = -pr.c * pr.dt + pr.p_up[i] * W[i + 1] + (1.0 - pr.p_up[i]) * W[i - 1];
        if (stop >= cont - tie_tol)
            act[i] = stop_l >= 0.0 ? Action::Launch : Action::Abandon;
        else
            act[i] = Action::Continue;
    }
    return act;
}

inline ValueFunction solve_problem(const GridProblem& pr, const ModelParams& params,
                                   const SolveOptions& opts) {
    const double tol_v = opts.tol_v > 0.0 ? opts.tol_v : 1e-9 * params.pi;
    const double tie_tol = opts.tie_tol > 0.0 ? opts.tie_tol : 1e-9 * params.pi;
    const std::size_t n = pr.grid.size();

    std::vector<double> W(n);
    for (std::size_t i = 0; i < n; ++i) W[i] = std::max(pr.stop_launch[i], 0.0);

    // Gauss-Seidel value iteration, alternating sweep direction.
    std::size_t sweeps = 0;
    bool converged = false;
    while (sweeps < opts.max_sweeps) {
        double delta = 0.0;
        auto update = [&](std::size_t i) {
            double stop = std::max(pr.stop_launch[i], 0.0);
            double cont =
                -pr.c * pr.dt + pr.p_up[i] * W[i + 1] + (1.0 - pr.p_up[i]) * W[i - 1];
            double w = std::max(stop, cont);
            delta = std::max(delta, std::abs(w - W[i]));
            W[i] = w;
        };
        if (sweeps % 2 == 0)
            for (std::size_t i = 1; i + 1 < n; ++i) update(i);
        else
            for (std::size_t i = n - 1; i-- > 1;) update(i);
        ++sweeps;
        if (delta < tol_v) { converged = true; break; }
    }
    if (!converged)
        raise(ErrorKind::NoConvergence, "value iteration exceeded the sweep budget");

    // Polish: label, evaluate the labeled policy exactly, relabel until the
    // action pattern is stable. The labeled values are exact to machine
    // precision, so downstream payoff comparisons are not limited by tol_v.
    std::vector<Action> act = label_actions(pr, W, tie_tol);
    bool stable = false;
    for (int round = 0; round < 64 && !stable; ++round) {
        std::vector<double> prev = W;
        evaluate_labels(pr, act, W);
        std::vector<Action> next = label_actions(pr, W, tie_tol);
        if (next == act) {
            stable = true;
        } else {
            double dv = 0.0;
            for (std::size_t i = 0; i < n; ++i) dv = std::max(dv, std::abs(W[i] - prev[i]));
            // label churn inside the tie band with settled values is benign
            if (round > 4 && dv < tie_tol) stable = true;
            act = std::move(next);
        }
    }
    if (!stable) raise(ErrorKind::NoConvergence, "policy labels failed to stabilize");
    evaluate_labels(pr, act, W);

    ValueFunction vf;
    vf.grid = pr.grid;
    vf.value = std::move(W);
    vf.action = std::move(act);
    vf.stop_launch = pr.stop_launch;
    vf.sweeps = sweeps;
    return vf;
}

// Exact random-walk value of the fixed policy (launch at node a, abandon at
// node b) evaluated at eval_idx, with a prescribed stop value at the launch
// node. Tridiagonal solve, so the result carries no iteration tolerance.
inline double grid_policy_value(const GridProblem& pr, std::size_t launch_idx,
                                double stop_at_launch, std::size_t abandon_idx,
                                std::size_t eval_idx) {
    if (launch_idx >= abandon_idx || eval_idx < launch_idx || eval_idx > abandon_idx)
        raise(ErrorKind::PreconditionViolated, "policy nodes must satisfy a <= eval <= b");
    if (eval_idx == launch_idx) return stop_at_launch;
    if (eval_idx == abandon_idx) return 0.0;
    std::size_t lo = launch_idx + 1, hi = abandon_idx - 1;
    std::size_t m = hi - lo + 1;
    std::vector<double> cp(m), dp(m);
    for (std::size_t j = 0; j < m; ++j) {
        double pu = pr.p_up[lo + j], pd = 1.0 - pu;
        double rhs = -pr.c * pr.dt;
        if (j == 0) rhs += pd * stop_at_launch;
        if (j == m - 1) rhs += pu * 0.0;
        double denom = (j == 0) ? 1.0 : 1.0 - pd * cp[j - 1];
        cp[j] = (j == m - 1) ? 0.0 : pu / denom;
        dp[j] = (j == 0) ? rhs : (rhs + pd * dp[j - 1]) / denom;
    }
    std::vector<double> W(m);
    W[m - 1] = dp[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) W[j] = dp[j] + cp[j] * W[j + 1];
    return W[eval_idx - lo];
}

struct BestAbandon {
    std::size_t abandon_idx = 0;
    double value = -std::numeric_limits<double>::infinity();
};

// Best abandonment node for a policy that launches at launch_idx, judged by
// the value at eval_idx. Candidates run from just above eval_idx to the top
// node inclusive.
inline BestAbandon best_grid_abandon(const GridProblem& pr, std::size_t launch_idx,
                                     double stop_at_launch, std::size_t eval_idx) {
    BestAbandon best;
    const std::size_t n = pr.grid.size();
    for (std::size_t b = eval_idx + 1; b < n; ++b) {
        double v = grid_policy_value(pr, launch_idx, stop_at_launch, b, eval_idx);
        if (v > best.value) {
            best.value = v;
            best.abandon_idx = b;
        }
    }
    return best;
}

} // namespace detail

// Tariff sampled onto grid nodes; point overrides land on their nearest node.
inline std::vector<double> sample_tariff(const Tariff& psi, const SolveGrid& grid) {
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = psi(grid.node(i));
    std::vector<std::size_t> used;
    for (const auto& [x, v] : psi.overrides()) {
        if (!grid.contains(x))
            raise(ErrorKind::GridTooSmall, "tariff override point outside the grid");
        std::size_t idx = grid.nearest_index(x);
        for (std::size_t u : used)
            if (u == idx)
                raise(ErrorKind::PreconditionViolated,
                      "tariff override points collide on the grid (h too coarse)");
        used.push_back(idx);
        vals[idx] = v;
    }
    return vals;
}

/**
 * Value iteration for a firm of type theta facing tariff psi.
 *
 * Random-walk discretization at node x: belief p = posterior(theta, x),
 * subjective drift mu = 2p - 1, up-probability (1 + mu h / sigma^2)/2,
 * time step h^2 / sigma^2, Bellman value
 *   W(x) = max{ pi - p psi(x), 0, -c dt + p_up W(x+h) + p_dn W(x-h) }.
 */
inline ValueFunction solve_general(FirmType theta, const Tariff& psi,
                                   const ModelParams& params, const SolveGrid& grid,
                                   const SolveOptions& opts = {}) {
    psi.validate_cap(params.l);
    detail::GridProblem pr =
        detail::make_problem(theta, sample_tariff(psi, grid), params, grid);
    ValueFunction vf = detail::solve_problem(pr, params, opts);
    if (opts.check_boundaries) {
        const std::size_t n = vf.action.size();
        if (vf.action[1] == Action::Continue || vf.action[n - 2] == Action::Continue)
            raise(ErrorKind::GridTooSmall,
                  "continuation region touches the grid boundary");
    }
    return vf;
}

// ============================================================================
// Threshold extraction from a solved value function
// ============================================================================

// Stopping-region boundaries on the extended real line: launch_boundary is
// +infinity when launching is optimal everywhere and -infinity when it is
// optimal nowhere; abandon_boundary mirrors this.
struct RegionThresholds {
    double launch_boundary = 0.0;
    double abandon_boundary = 0.0;
    bool has_continue = false;

    ThresholdPolicy to_policy(double start = 0.0) const {
        if (launch_boundary >= start) return ThresholdPolicy::immediate_launch(start);
        if (abandon_boundary <= start) return ThresholdPolicy::immediate_abandon(start);
        return ThresholdPolicy::interior(launch_boundary, abandon_boundary, start);
    }
};

// Realized stopping behavior from the start node: the first non-Continue
// node at or below the start and the first at or above it. Point-override
// tariffs can have globally non-threshold action patterns whose off-path
// pieces are never reached from the start; outcome checks (Theorem-1
// conversion, synthesis verification) care about this view.
struct StartBehavior {
    Action down_action = Action::Abandon;
    Action up_action = Action::Abandon;
    double down_node = 0.0;
    double up_node = 0.0;
    bool immediate = false;  // the start node itself is a stop node
};

inline StartBehavior policy_from_start(const ValueFunction& vf) {
    const std::size_t o = vf.grid.origin_index();
    StartBehavior r;
    if (vf.action[o] != Action::Continue) {
        r.immediate = true;
        r.down_action = r.up_action = vf.action[o];
        r.down_node = r.up_node = vf.grid.node(o);
        return r;
    }
    std::size_t d = o;
    while (vf.action[d] == Action::Continue) --d;  // node 0 is never Continue
    std::size_t u = o;
    while (vf.action[u] == Action::Continue) ++u;
    r.down_action = vf.action[d];
    r.up_action = vf.action[u];
    r.down_node = vf.grid.node(d);
    r.up_node = vf.grid.node(u);
    return r;
}

// The action pattern must be of threshold form: a launch block below, a
// single continuation block, an abandon block above (any of them possibly
// empty). Anything else signals an inadmissible tariff.
inline RegionThresholds extract_thresholds(const ValueFunction& vf) {
    const auto& act = vf.action;
    const std::size_t n = act.size();
    std::size_t i = 0;
    std::size_t launch_end = 0;  // one past the launch block
    while (i < n && act[i] == Action::Launch) ++i;
    launch_end = i;
    std::size_t cont_end = launch_end;
    while (i < n && act[i] == Action::Continue) ++i;
    cont_end = i;
    while (i < n && act[i] == Action::Abandon) ++i;
    if (i != n)
        raise(ErrorKind::NonIntervalRegion,
              "action pattern is not launch/continue/abandon ordered");

    RegionThresholds r;
    r.has_continue = cont_end > launch_end;
    const double inf = std::numeric_limits<double>::infinity();
    if (launch_end == 0)
        r.launch_boundary = -inf;
    else if (launch_end == n)
        r.launch_boundary = inf;
    else
        r.launch_boundary = vf.grid.node(launch_end - 1);
    if (cont_end == n)
        r.abandon_boundary = inf;
    else
        r.abandon_boundary = vf.grid.node(cont_end);
    return r;
}

} // namespace wald
