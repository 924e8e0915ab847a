#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "wald/diffusion.hpp"
#include "wald/fee_example.hpp"
#include "wald/grid.hpp"
#include "wald/mechanism.hpp"
#include "wald/model.hpp"
#include "wald/scenario.hpp"
#include "wald/simulate.hpp"
#include "wald/solver.hpp"
#include "wald/tariff.hpp"

namespace wald {

// ============================================================================
// Property suites: machine checks of every proposition at desk scale.
// The CLI `verify` subcommand runs them with moderate trial counts; the
// acceptance suite reuses them at the full counts.
// ============================================================================

struct CheckResult {
    std::string name;
    bool pass = false;
    std::vector<std::string> notes;
    std::map<std::string, double> metrics;

    void note(const std::string& s) { notes.push_back(s); }
};

struct VerifyConfig {
    std::uint64_t seed = 7;
    int prop1_sets = 12;
    int lemma1_trials = 200;
    int prop2_random_tariffs = 5;
    std::vector<int> roundtrip_sizes = {2, 3};
    int synthesis_types = 4;
    int lemma2_points = 25;
    double grid_step = 0.0;  // 0: sigma^2/20 per parameter set
};

// Operation-coverage registry: `verify` must exercise every public
// operation of every primary module at least once.
class Coverage {
public:
    void mark(const std::string& op) { seen_.insert(op); }

    static const std::vector<std::string>& manifest() {
        static const std::vector<std::string> ops = {
            "validate_params",    "tariff_eval",
            "posterior",          "hit_lower_prob",
            "expected_exit_time", "exit_stats",
            "firm_policy_value",  "regulator_policy_value",
            "best_threshold_policy", "solve_general",
            "extract_thresholds", "benchmarks",
            "ceiling_conversion", "single_crossing_check",
            "monotonicity_check", "synthesize_monotone",
            "identifiability_check", "fee_policy_value",
            "best_abandon_given_launch", "construct_violation_menu",
            "mimic_payoff_gap",   "simulate_exit",
            "estimate_policy_value",
        };
        return ops;
    }

    CheckResult check() const {
        CheckResult r;
        r.name = "operation coverage";
        r.pass = true;
        for (const auto& op : manifest())
            if (!seen_.count(op)) {
                r.pass = false;
                r.note("not exercised: " + op);
            }
        r.metrics["operations"] = static_cast<double>(seen_.size());
        return r;
    }

private:
    std::set<std::string> seen_;
};

namespace verify_detail {

// Random validated parameter sets for the proposition sweeps. Constraints:
// beta < L keeps the regulator's stopping payoff kinked, and the flow cost
// is small against the payoff scale so the first best stays interior at
// every prior in {0.1,...,0.9} (the strict recklessness margin degenerates
// at regulator corner solutions). A fixed share of draws has beta > pi.
inline ModelParams random_params(std::mt19937_64& rng, bool force_beta_above_pi,
                                 bool allow_cap_above_profit = true) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
        double sigma = 0.8 + 0.5 * u(rng);
        double pi = 0.7 + 0.8 * u(rng);
        double beta = force_beta_above_pi ? pi * (1.05 + 0.4 * u(rng))
                                          : pi * (0.7 + 0.8 * u(rng));
        double L = beta * (1.7 + 1.3 * u(rng));
        double hi = std::min(allow_cap_above_profit ? 1.5 * pi : 0.95 * pi,
                             0.9 * L * pi / beta);
        double lo = 0.3 * pi;
        if (hi <= lo) continue;
        double l = lo + (hi - lo) * u(rng);
        double c = (0.012 + 0.03 * u(rng)) * std::min(pi, beta);
        if (!(l < L) || !(l * beta < L * pi)) continue;
        return validate_params(sigma, c, pi, beta, l, L);
    }
}

// Interior first best at every listed prior; rejection keeps the Prop-1
// margins meaningful without peeking at the firm's side.
inline bool regulator_interior(const ModelParams& p, const TypeSpace& types,
                               const SolveGrid& grid) {
    for (const FirmType& th : types) {
        auto fb = best_threshold_policy(th, regulator_launch_payoff(th, p), p, grid);
        if (fb.policy.kind() == ThresholdPolicy::Kind::ImmediateLaunch) return false;
    }
    return true;
}

inline TypeSpace nine_priors() {
    TypeSpace t;
    for (int i = 1; i <= 9; ++i) t.push_back(FirmType{0.1 * i});
    return t;
}

// Mild random non-decreasing step tariff; most draws are inadmissible for a
// wide type span, so callers filter.
inline Tariff random_step_tariff(std::mt19937_64& rng, const ModelParams& p) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int nb = 1 + static_cast<int>(u(rng) * 2.0);
    std::vector<double> bps;
    for (int i = 0; i < nb; ++i)
        bps.push_back(p.sigma * p.sigma * (-2.0 + 4.0 * u(rng)));
    std::sort(bps.begin(), bps.end());
    for (std::size_t i = 1; i < bps.size(); ++i)
        if (bps[i] - bps[i - 1] < 0.2) bps[i] = bps[i - 1] + 0.2;
    std::vector<double> vals(bps.size());
    double top = p.l;
    for (int i = nb - 1; i >= 0; --i) {
        vals[i] = top;
        top -= 0.25 * p.pi * u(rng);
    }
    return Tariff(bps, vals, top);
}

// Arbitrary bounded piecewise tariff (possibly non-monotone, with
// subsidies) for the single-crossing sweep, which needs no admissibility.
inline Tariff random_rough_tariff(std::mt19937_64& rng, const ModelParams& p) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double b1 = p.sigma * p.sigma * (-1.5 + 2.0 * u(rng));
    double b2 = b1 + 0.3 + 1.5 * u(rng);
    auto val = [&] { return p.l - 1.2 * p.pi * u(rng); };
    return Tariff({b1, b2}, {val(), val()}, val());
}

// Decreasing targets below each type's ceiling threshold (and the start).
inline std::vector<std::pair<double, double>> make_targets(const ModelParams& p,
                                                           const TypeSpace& types,
                                                           const SolveGrid& grid,
                                                           double step_mult = 0.25) {
    std::vector<std::pair<double, double>> targets;
    double prev = 0.0;
    std::size_t i = 1;
    for (const FirmType& th : types) {
        ValueFunction vf = solve_general(th, Tariff::uniform(p.l), p, grid);
        double ceil_b = extract_thresholds(vf).launch_boundary;
        double anchor = std::min(ceil_b, 0.0);
        double x = std::min(anchor, prev) - step_mult * p.sigma * p.sigma;
        targets.emplace_back(th.theta, x);
        prev = x;
        ++i;
    }
    return targets;
}

} // namespace verify_detail

// ---------------------------------------------------------------------------
// Prop. 1 (recklessness): first-best launch threshold strictly below the
// uniform-ceiling one, margin beyond 2h, across random parameter sets and
// nine priors, including sets whose social benefit exceeds the profit.
// ---------------------------------------------------------------------------
inline CheckResult check_prop1(const VerifyConfig& cfg, Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "Prop 1 recklessness";
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    TypeSpace priors = verify_detail::nine_priors();
    int done = 0, rejected = 0, beta_above_pi = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    while (done < cfg.prop1_sets) {
        bool force = done % 3 == 2;  // a third of the sets have beta > pi
        ModelParams p = verify_detail::random_params(rng, force);
        SolveGrid grid = default_grid(p, priors, cfg.grid_step);
        if (!verify_detail::regulator_interior(p, priors, grid)) {
            ++rejected;
            continue;
        }
        BenchmarkThresholds b = benchmarks(p, priors, grid);  // throws on violation
        if (cov) cov->mark("benchmarks");
        if (cov) cov->mark("best_threshold_policy");
        for (const auto& row : b.rows) {
            double margin = row.ceiling_launch - row.first_best_launch - 2.0 * grid.h();
            min_margin = std::min(min_margin, margin);
        }
        beta_above_pi += p.beta > p.pi;
        ++done;
    }
    r.metrics["sets"] = done;
    r.metrics["rejected_corner_sets"] = rejected;
    r.metrics["sets_with_beta_above_pi"] = beta_above_pi;
    r.metrics["min_margin"] = min_margin;
    r.pass = min_margin > 0.0 && beta_above_pi > 0;
    return r;
}

// ---------------------------------------------------------------------------
// Lemma 1 (single crossing): no violation of "theta continues => theta'
// continues" across random tariffs, levels and type pairs; the b-term stays
// below pi in every trial.
// ---------------------------------------------------------------------------
inline CheckResult check_lemma1(const VerifyConfig& cfg, Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "Lemma 1 single crossing";
    std::mt19937_64 rng(cfg.seed ^ 0x51a2b3c4d5e6f708ULL);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int violations = 0, b_failures = 0, continuing = 0;
    for (int t = 0; t < cfg.lemma1_trials; ++t) {
        ModelParams p = verify_detail::random_params(rng, false);
        SolveGrid grid = default_grid(p, {0.5}, cfg.grid_step);
        Tariff psi = verify_detail::random_rough_tariff(rng, p);
        double x = p.sigma * p.sigma * (-1.0 + 2.0 * u(rng));
        double t1 = 0.05 + 0.6 * u(rng);
        double t2 = t1 + (0.95 - t1) * u(rng);
        auto res = single_crossing_check(psi, x, t1, t2, p, grid);
        if (cov) {
            cov->mark("single_crossing_check");
            cov->mark("tariff_eval");
            cov->mark("posterior");
            cov->mark("hit_lower_prob");
            cov->mark("expected_exit_time");
        }
        violations += !res.holds;
        b_failures += !(res.b_term < p.pi);
        continuing += res.theta_continues;
    }
    r.metrics["trials"] = cfg.lemma1_trials;
    r.metrics["violations"] = violations;
    r.metrics["b_term_failures"] = b_failures;
    r.metrics["continuing_trials"] = continuing;
    r.pass = violations == 0 && b_failures == 0 && continuing > cfg.lemma1_trials / 20;
    return r;
}

// ---------------------------------------------------------------------------
// Prop. 2 (monotone thresholds): weakly decreasing launch thresholds in the
// prior for the uniform ceiling, a synthesized tariff, and random admissible
// step tariffs.
// ---------------------------------------------------------------------------
inline CheckResult check_prop2(const Scenario& scenario, const VerifyConfig& cfg,
                               Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "Prop 2 monotonicity";
    const ModelParams& p = scenario.params;
    TypeSpace types =
        scenario.types.empty() ? verify_detail::nine_priors() : scenario.types;
    SolveGrid grid = default_grid(p, types, cfg.grid_step);
    std::mt19937_64 rng(cfg.seed ^ 0x7f4a7c159e3779b9ULL);

    int checked = 0, tried = 0;
    bool all_decreasing = true;

    auto run = [&](const Tariff& t, const std::string& label) {
        auto m = monotonicity_check(t, types, p, grid);
        if (cov) cov->mark("monotonicity_check");
        all_decreasing &= m.decreasing;
        if (!m.decreasing) r.note("not decreasing under " + label);
        ++checked;
    };

    run(Tariff::uniform(p.l), "the uniform ceiling");
    if (cov) cov->mark("solve_general"), cov->mark("extract_thresholds");

    // synthesized tariff over a compact sub-span of types
    TypeSpace synth_types = {types.front(), types[types.size() / 2], types.back()};
    auto targets = verify_detail::make_targets(p, synth_types, grid);
    SynthesisReport rep = synthesize_monotone(targets, p, grid);
    if (cov) cov->mark("synthesize_monotone");
    run(rep.tariff, "the synthesized tariff");

    int admissible = 0;
    while (admissible < cfg.prop2_random_tariffs && tried < 60 * cfg.prop2_random_tariffs) {
        ++tried;
        Tariff t = verify_detail::random_step_tariff(rng, p);
        try {
            run(t, "a random step tariff");
            ++admissible;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::InadmissibleTariff) throw;
            --checked;
        }
    }
    r.metrics["tariffs_checked"] = checked;
    r.metrics["random_admissible"] = admissible;
    r.metrics["random_tried"] = tried;
    r.pass = all_decreasing && admissible >= cfg.prop2_random_tariffs;
    return r;
}

// ---------------------------------------------------------------------------
// Theorem 1 (round trip): menus produced by the synthesis convert to ceiling
// tariffs that are outcome equivalent.
// ---------------------------------------------------------------------------
inline CheckResult check_thm1_roundtrip(const Scenario& scenario, const VerifyConfig& cfg,
                                        std::vector<DirectMechanism>* menus_out,
                                        Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "Theorem 1 round trip";
    const ModelParams& p = scenario.params;
    double worst_pay = 0.0, worst_thr = 0.0;
    bool ok = true;
    for (int size : cfg.roundtrip_sizes) {
        TypeSpace types;
        for (int i = 0; i < size; ++i)
            types.push_back(FirmType{0.25 + 0.5 * i / std::max(1, size - 1)});
        SolveGrid grid = default_grid(p, types, cfg.grid_step);
        auto targets = verify_detail::make_targets(p, types, grid, 0.2);
        SynthesisReport rep = synthesize_monotone(targets, p, grid);
        if (cov) cov->mark("synthesize_monotone");
        try {
            CeilingConversion conv = ceiling_conversion(rep.menu, p, grid);
            if (cov) cov->mark("ceiling_conversion");
            for (const auto& row : conv.rows) {
                worst_thr = std::max(worst_thr, std::abs(row.achieved_threshold -
                                                         row.designated_threshold));
                worst_pay =
                    std::max(worst_pay, std::abs(row.achieved_value - row.menu_value));
            }
        } catch (const Error& e) {
            ok = false;
            r.note(std::string("conversion failed at size ") + std::to_string(size) +
                   ": " + e.what());
        }
        if (menus_out) menus_out->push_back(rep.menu);
    }
    r.metrics["max_threshold_gap"] = worst_thr;
    r.metrics["max_payoff_gap"] = worst_pay;
    r.pass = ok && worst_pay <= 1e-9 * p.pi;
    return r;
}

// ---------------------------------------------------------------------------
// Section-5 synthesis: monotone, capped, piecewise-constant tariffs that
// implement decreasing target profiles.
// ---------------------------------------------------------------------------
inline CheckResult check_sec5(const Scenario& scenario, const VerifyConfig& cfg,
                              std::vector<DirectMechanism>* menus_out,
                              Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "Sec 5 synthesis";
    const ModelParams& p = scenario.params;
    const int n = cfg.synthesis_types;
    TypeSpace types;
    for (int i = 0; i < n; ++i)
        types.push_back(FirmType{0.15 + 0.7 * i / std::max(1, n - 1)});
    SolveGrid grid = default_grid(p, types, cfg.grid_step);
    auto targets = scenario.targets.empty()
                       ? verify_detail::make_targets(p, types, grid, 0.15)
                       : scenario.targets;
    SynthesisReport rep = synthesize_monotone(targets, p, grid);
    if (cov) cov->mark("synthesize_monotone");
    bool monotone = rep.tariff.non_decreasing_segments();
    bool capped = true;
    try {
        rep.tariff.validate_cap(p.l);
    } catch (const Error&) {
        capped = false;
    }
    r.metrics["types"] = n;
    r.metrics["max_deviation"] = rep.max_deviation;
    r.metrics["grid_step"] = grid.h();
    r.pass = monotone && capped && rep.max_deviation <= 2.0 * grid.h();
    if (menus_out) menus_out->push_back(rep.menu);
    return r;
}

// ---------------------------------------------------------------------------
// Lemma 2 and the fee example: payoff-gap positivity on the lower half and
// the certified monotonicity-reversal menu. Runs on the scenario parameters
// when the cap exceeds the profit, otherwise on the reference variant with
// the cap lifted to 1.2 pi.
// ---------------------------------------------------------------------------
inline CheckResult check_lemma2_example(const Scenario& scenario, const VerifyConfig& cfg,
                                        std::vector<DirectMechanism>* menus_out,
                                        Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "Lemma 2 fee example";
    ModelParams p = scenario.params;
    if (!(p.l > p.pi)) {
        p = validate_params(p.sigma, p.c, p.pi, p.beta, 1.2 * p.pi, std::max(p.L, 2.0 * p.pi));
        r.note("cap lifted above the profit for the fee example");
    }
    std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    int bad_gap = 0, bad_time = 0, bad_freq = 0;
    for (int i = 0; i < cfg.lemma2_points; ++i) {
        double a = -(0.3 + 1.7 * u(rng));
        double b = 0.3 + 1.7 * u(rng);
        double x = a + (0.5 * (b - a)) * (0.05 + 0.9 * u(rng));
        double eta = p.pi * (0.9 - 1.4 * u(rng));
        auto strat = ThresholdPolicy::interior(a, b, x);
        MimicGap g = mimic_payoff_gap(strat, eta, x, p);
        if (cov) cov->mark("mimic_payoff_gap"), cov->mark("exit_stats");
        bad_gap += !(g.gap > 0.0);
        bad_time += !(g.T_b > g.T_g);
        bad_freq += !(g.f_g + g.f_b > 1.0);
    }

    SolveGrid grid = default_grid(p, {});
    FeeCertification cert = construct_violation_menu(p, grid);
    if (cov) {
        cov->mark("construct_violation_menu");
        cov->mark("best_abandon_given_launch");
        cov->mark("fee_policy_value");
    }
    bool reversal = cert.menu.safe_launch < cert.menu.damaging_launch;
    bool certified = std::abs(cert.safe_indifference_residual) < 1e-9 * p.pi &&
                     cert.damaging_margin > 0.0;
    r.metrics["points"] = cfg.lemma2_points;
    r.metrics["gap_failures"] = bad_gap;
    r.metrics["safe_indifference_residual"] = cert.safe_indifference_residual;
    r.metrics["damaging_margin"] = cert.damaging_margin;
    r.metrics["safe_launch"] = cert.menu.safe_launch;
    r.metrics["damaging_launch"] = cert.menu.damaging_launch;
    r.pass = bad_gap == 0 && bad_time == 0 && bad_freq == 0 && reversal && certified;
    if (menus_out) menus_out->push_back(fee_menu_as_mechanism(cert.menu, p));
    return r;
}

// ---------------------------------------------------------------------------
// Prop. 4 (identifiability): every distinct-threshold menu collected from
// the other suites partitions cleanly.
// ---------------------------------------------------------------------------
inline CheckResult check_prop4(const std::vector<DirectMechanism>& menus,
                               Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "Prop 4 identifiability";
    int identifiable = 0;
    bool ok = !menus.empty();
    for (const auto& m : menus) {
        auto res = identifiability_check(m);
        if (cov) cov->mark("identifiability_check");
        if (res.identifiable && res.cells.size() == m.items().size() + 1)
            ++identifiable;
        else
            ok = false;
    }
    // the negative direction: an equal-threshold menu reports the pair
    DirectMechanism colliding({{0.2, -0.5, 0.1}, {0.8, -0.5, 0.1}}, 1.0);
    auto res = identifiability_check(colliding);
    ok = ok && !res.identifiable && res.collision.has_value();
    r.metrics["menus"] = static_cast<double>(menus.size());
    r.metrics["identifiable"] = identifiable;
    r.pass = ok && identifiable == static_cast<int>(menus.size());
    return r;
}

// ---------------------------------------------------------------------------
// Simulation oracle agreement at reduced scale, plus the policy-value
// estimators; completes the operation coverage of `verify`.
// ---------------------------------------------------------------------------
inline CheckResult check_oracle(const Scenario& scenario, const VerifyConfig& cfg,
                                Coverage* cov = nullptr) {
    CheckResult r;
    r.name = "simulation oracle agreement";
    const ModelParams& p = scenario.params;
    auto pol = ThresholdPolicy::interior(-p.sigma * p.sigma, p.sigma * p.sigma, 0.0);
    SimConfig sim;
    sim.n_paths = 20000;
    sim.seed = cfg.seed;
    double worst = 0.0;
    for (int y : {0, 1}) {
        auto emp = simulate_exit(y, pol, sim, p.sigma);
        if (cov) cov->mark("simulate_exit");
        double f = hit_lower_prob(0.0, pol.launch_at(), pol.abandon_at(), drift_of(y),
                                  p.sigma);
        double T = expected_exit_time(0.0, pol.launch_at(), pol.abandon_at(), drift_of(y),
                                      p.sigma);
        worst = std::max(worst, std::abs(emp.f - f) / emp.f_se);
        worst = std::max(worst, std::abs(emp.T - T) / emp.T_se);
    }
    Tariff psi = scenario.tariff ? *scenario.tariff : Tariff::uniform(p.l);
    FirmType th = scenario.types.empty() ? FirmType{0.5} : scenario.types.front();
    auto est = estimate_policy_value(th, pol, psi, sim, p);
    if (cov) cov->mark("estimate_policy_value");
    double closed = firm_policy_value(th, pol, psi, p);
    if (cov) cov->mark("firm_policy_value");
    auto reg = estimate_regulator_value(th, pol, sim, p);
    double reg_closed = regulator_policy_value(th, pol, p);
    if (cov) cov->mark("regulator_policy_value");
    worst = std::max(worst, std::abs(est.mean - closed) / est.se);
    worst = std::max(worst, std::abs(reg.mean - reg_closed) / reg.se);
    r.metrics["worst_deviation_se"] = worst;
    r.metrics["n_paths"] = static_cast<double>(sim.n_paths);
    r.pass = worst <= 3.0;
    return r;
}

// ---------------------------------------------------------------------------
// The full suite as run by `verify`.
// ---------------------------------------------------------------------------
struct SuiteReport {
    std::vector<CheckResult> checks;
    bool all_pass = true;
};

inline SuiteReport run_verify_suite(const Scenario& scenario, const VerifyConfig& cfg) {
    SuiteReport report;
    Coverage cov;
    cov.mark("validate_params");  // scenario loading validated the parameters
    std::vector<DirectMechanism> menus;

    report.checks.push_back(check_prop1(cfg, &cov));
    report.checks.push_back(check_lemma1(cfg, &cov));
    report.checks.push_back(check_prop2(scenario, cfg, &cov));
    report.checks.push_back(check_thm1_roundtrip(scenario, cfg, &menus, &cov));
    report.checks.push_back(check_sec5(scenario, cfg, &menus, &cov));
    report.checks.push_back(check_lemma2_example(scenario, cfg, &menus, &cov));
    report.checks.push_back(check_prop4(menus, &cov));
    report.checks.push_back(check_oracle(scenario, cfg, &cov));
    report.checks.push_back(cov.check());

    for (const auto& c : report.checks) report.all_pass &= c.pass;
    return report;
}

} // namespace wald
