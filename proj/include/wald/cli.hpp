#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wald/fee_example.hpp"
#include "wald/mechanism.hpp"
#include "wald/report.hpp"
#include "wald/scenario.hpp"
#include "wald/simulate.hpp"
#include "wald/solver.hpp"
#include "wald/verify.hpp"

namespace wald::cli {

inline int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::NonPositiveParam:
        case ErrorKind::CapViolation:
        case ErrorKind::AssumptionViolation:
        case ErrorKind::MalformedInput:
        case ErrorKind::PreconditionViolated:
        case ErrorKind::InconsistentMenu:
            return 2;
        case ErrorKind::DomainError:
        case ErrorKind::GridTooSmall:
        case ErrorKind::NoConvergence:
        case ErrorKind::NonIntervalRegion:
        case ErrorKind::InadmissibleTariff:
        case ErrorKind::BisectionFailed:
        case ErrorKind::ConstructionFailed:
        case ErrorKind::TruncationExceeded:
            return 3;
        case ErrorKind::RecklessnessViolation:
        case ErrorKind::NotOutcomeEquivalent:
            return 4;
    }
    return 3;
}

inline unsigned thread_cap() {
    if (const char* env = std::getenv("WALD_LIABILITY_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs fn(i) for i in [0, n) on up to thread_cap() workers; results must be
// written into preallocated slots so output stays order-deterministic.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = std::min<std::size_t>(thread_cap(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

struct CommonOptions {
    std::string scenario_path;
    std::string out_dir = ".";
    std::uint64_t seed = 7;
    double grid_step = 0.0;
    double tol_v = 0.0;
};

inline std::string out_path(const CommonOptions& opt, const std::string& name) {
    std::filesystem::create_directories(opt.out_dir);
    return (std::filesystem::path(opt.out_dir) / name).string();
}

inline void write_run_config(const CommonOptions& opt, const std::string& command,
                             const Scenario& s, const SolveGrid& grid) {
    Json j;
    j["command"] = command;
    j["scenario"] = opt.scenario_path;
    j["seed"] = opt.seed;
    j["out"] = opt.out_dir;
    j["grid"] = {{"x_min", grid.x_min()}, {"x_max", grid.x_max()}, {"h", grid.h()}};
    j["tol_v"] = opt.tol_v > 0.0 ? opt.tol_v : 1e-9 * s.params.pi;
    j["threads"] = thread_cap();
    j["sim"] = {{"dt", s.sim.dt},
                {"n_paths", s.sim.n_paths},
                {"seed", s.sim.seed},
                {"max_time", s.sim.max_time}};
    write_text_file(out_path(opt, command + "_config.json"), j.dump(2) + "\n");
}

inline Tariff named_tariff(const std::string& name, const Scenario& s) {
    if (name == "zero") return Tariff::uniform(0.0);
    if (name == "ceiling") return Tariff::uniform(s.params.l);
    if (name == "scenario") {
        if (!s.tariff)
            raise(ErrorKind::MalformedInput, "scenario carries no tariff section");
        return *s.tariff;
    }
    raise(ErrorKind::MalformedInput, "unknown tariff name: " + name);
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

inline void cmd_benchmarks(const CommonOptions& opt) {
    Scenario s = load_scenario(opt.scenario_path);
    if (s.types.empty()) raise(ErrorKind::MalformedInput, "scenario lists no types");
    SolveGrid grid = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "benchmarks", s, grid);
    BenchmarkThresholds b = benchmarks(s.params, s.types, grid);
    CsvWriter csv({"theta", "first_best_launch", "first_best_abandon", "ceiling_launch",
                   "ceiling_abandon", "first_best_value", "ceiling_value"});
    for (const auto& r : b.rows)
        csv.add_row({fmt_num(r.theta), fmt_num(r.first_best_launch),
                     fmt_num(r.first_best_abandon), fmt_num(r.ceiling_launch),
                     fmt_num(r.ceiling_abandon), fmt_num(r.first_best_value),
                     fmt_num(r.ceiling_value)});
    csv.write(out_path(opt, "benchmarks.csv"));
    std::cout << "wrote " << out_path(opt, "benchmarks.csv") << "\n";
}

inline void cmd_solve(const CommonOptions& opt, const std::string& tariff_name) {
    Scenario s = load_scenario(opt.scenario_path);
    if (s.types.empty()) raise(ErrorKind::MalformedInput, "scenario lists no types");
    SolveGrid grid = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "solve", s, grid);
    Tariff psi = named_tariff(tariff_name, s);
    CsvWriter csv({"theta", "kind", "launch_threshold", "abandon_threshold", "value"});
    for (const FirmType& th : s.types) {
        ValueFunction vf = solve_general(th, psi, s.params, grid);
        StartBehavior b = policy_from_start(vf);
        std::string kind;
        if (b.immediate)
            kind = b.down_action == Action::Launch ? "immediate_launch"
                                                   : "immediate_abandon";
        else
            kind = "interior";
        csv.add_row({fmt_num(th.theta), kind, fmt_num(b.down_node), fmt_num(b.up_node),
                     fmt_num(vf.value[grid.origin_index()])});
    }
    csv.write(out_path(opt, "solve.csv"));
    std::cout << "wrote " << out_path(opt, "solve.csv") << "\n";
}

inline Json synthesis_to_json(const SynthesisReport& rep) {
    Json j;
    j["tariff"] = tariff_to_json(rep.tariff);
    j["max_deviation"] = rep.max_deviation;
    j["nudge"] = rep.nudge;
    Json rows = Json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"theta", r.theta},
                        {"target_requested", r.target_requested},
                        {"target", r.target},
                        {"achieved", r.achieved},
                        {"penalty", r.penalty},
                        {"residual", r.residual},
                        {"alternative_value", r.alternative_value},
                        {"adjusted", r.adjusted}});
    j["rows"] = rows;
    return j;
}

inline SynthesisReport run_synthesis(const Scenario& s, const SolveGrid& grid) {
    if (s.targets.empty())
        raise(ErrorKind::MalformedInput, "scenario lists no synthesis targets");
    return synthesize_monotone(s.targets, s.params, grid);
}

inline void cmd_synthesize(const CommonOptions& opt) {
    Scenario s = load_scenario(opt.scenario_path);
    SolveGrid grid = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "synthesize", s, grid);
    SynthesisReport rep = run_synthesis(s, grid);
    write_text_file(out_path(opt, "synthesize.json"), synthesis_to_json(rep).dump(2) + "\n");
    std::cout << "wrote " << out_path(opt, "synthesize.json") << "\n";
}

inline void cmd_convert(const CommonOptions& opt) {
    // round trip: synthesize a menu from the targets, then convert it to a
    // ceiling tariff and verify outcome equivalence
    Scenario s = load_scenario(opt.scenario_path);
    SolveGrid grid = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "convert", s, grid);
    SynthesisReport rep = run_synthesis(s, grid);
    double pay_tol = opt.tol_v > 0.0 ? opt.tol_v : -1.0;
    CeilingConversion conv = ceiling_conversion(rep.menu, s.params, grid, pay_tol);
    Json j;
    j["menu"] = Json::array();
    for (const auto& item : rep.menu.items())
        j["menu"].push_back({{"theta", item.theta},
                             {"launch_threshold", item.launch_threshold},
                             {"penalty", item.penalty}});
    j["tariff"] = tariff_to_json(conv.tariff);
    Json rows = Json::array();
    for (const auto& r : conv.rows)
        rows.push_back({{"theta", r.theta},
                        {"designated_threshold", r.designated_threshold},
                        {"achieved_threshold", r.achieved_threshold},
                        {"menu_value", r.menu_value},
                        {"achieved_value", r.achieved_value}});
    j["rows"] = rows;
    write_text_file(out_path(opt, "convert.json"), j.dump(2) + "\n");
    std::cout << "wrote " << out_path(opt, "convert.json") << "\n";
}

inline void cmd_counterexample(const CommonOptions& opt) {
    Scenario s = load_scenario(opt.scenario_path);
    SolveGrid grid = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "counterexample", s, grid);
    FeeCertification cert = construct_violation_menu(s.params, grid);
    Json j;
    j["menu"] = {{"safe_launch", cert.menu.safe_launch},
                 {"safe_fee", cert.menu.safe_fee},
                 {"damaging_launch", cert.menu.damaging_launch},
                 {"damaging_fee", cert.menu.damaging_fee},
                 {"damaging_abandon", cert.menu.damaging_abandon}};
    j["safe_indifference_residual"] = cert.safe_indifference_residual;
    j["damaging_margin"] = cert.damaging_margin;
    j["damaging_solve_launch"] = cert.damaging_solve_launch;
    j["damaging_deviation_abandons"] = cert.damaging_deviation_abandons;
    j["mimic_gap_at_x1"] = cert.mimic_gap_at_x1;
    Json trace = Json::array();
    for (const auto& st : cert.trace)
        trace.push_back({{"candidate_launch", st.candidate_launch},
                         {"candidate_fee", st.candidate_fee},
                         {"reached_stage", st.reached_stage},
                         {"note", st.note}});
    j["trace"] = trace;
    write_text_file(out_path(opt, "counterexample.json"), j.dump(2) + "\n");
    std::cout << "wrote " << out_path(opt, "counterexample.json") << "\n";
}

inline int cmd_verify(const CommonOptions& opt, const VerifyConfig& cfg_in) {
    Scenario s = load_scenario(opt.scenario_path);
    SolveGrid grid = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "verify", s, grid);
    VerifyConfig cfg = cfg_in;
    cfg.seed = opt.seed;
    cfg.grid_step = opt.grid_step;
    SuiteReport rep = run_verify_suite(s, cfg);
    Json j;
    j["seed"] = cfg.seed;
    Json checks = Json::array();
    for (const auto& c : rep.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "\n";
        Json cj;
        cj["name"] = c.name;
        cj["pass"] = c.pass;
        cj["metrics"] = Json::object();
        for (const auto& [k, v] : c.metrics) cj["metrics"][k] = v;
        cj["notes"] = c.notes;
        checks.push_back(cj);
    }
    j["checks"] = checks;
    j["all_pass"] = rep.all_pass;
    write_text_file(out_path(opt, "verify_report.json"), j.dump(2) + "\n");
    return rep.all_pass ? 0 : 4;
}

inline void cmd_simulate(const CommonOptions& opt, const std::string& tariff_name) {
    Scenario s = load_scenario(opt.scenario_path);
    if (s.types.empty()) raise(ErrorKind::MalformedInput, "scenario lists no types");
    SolveGrid grid = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "simulate", s, grid);
    Tariff psi = named_tariff(tariff_name, s);
    SimConfig sim = s.sim;
    sim.seed = opt.seed;
    if (sim.dt > grid.h() * grid.h() / (s.params.sigma * s.params.sigma))
        raise(ErrorKind::PreconditionViolated,
              "sim dt must not exceed the companion grid's h^2/sigma^2");
    CsvWriter csv({"name", "estimate", "se", "n", "seed", "dt"});
    auto row = [&](const std::string& name, double est, double se) {
        csv.add_row({name, fmt_num(est), fmt_num(se), std::to_string(sim.n_paths),
                     std::to_string(sim.seed), fmt_num(sim.dt)});
    };
    for (const FirmType& th : s.types) {
        ValueFunction vf = solve_general(th, psi, s.params, grid);
        StartBehavior b = policy_from_start(vf);
        std::string tag = "[theta=" + fmt_num(th.theta) + "]";
        if (!b.immediate && b.down_action == Action::Launch &&
            b.up_action == Action::Abandon) {
            auto pol = ThresholdPolicy::interior(b.down_node, b.up_node, 0.0);
            for (int y : {0, 1}) {
                auto emp = simulate_exit(y, pol, sim, s.params.sigma);
                row(std::string(y ? "f_b" : "f_g") + tag, emp.f, emp.f_se);
                row(std::string(y ? "T_b" : "T_g") + tag, emp.T, emp.T_se);
            }
            auto est = estimate_policy_value(th, pol, psi, sim, s.params);
            row("firm_value" + tag, est.mean, est.se);
        } else {
            auto pol = b.down_action == Action::Launch
                           ? ThresholdPolicy::immediate_launch(0.0)
                           : ThresholdPolicy::immediate_abandon(0.0);
            auto est = estimate_policy_value(th, pol, psi, sim, s.params);
            row("firm_value" + tag, est.mean, est.se);
        }
    }
    csv.write(out_path(opt, "simulate.csv"));
    std::cout << "wrote " << out_path(opt, "simulate.csv") << "\n";
}

inline void cmd_sweep(const CommonOptions& opt, const std::string& param, double from,
                      double to, int steps) {
    Scenario s = load_scenario(opt.scenario_path);
    if (s.types.empty()) raise(ErrorKind::MalformedInput, "scenario lists no types");
    if (steps < 2) raise(ErrorKind::MalformedInput, "sweep needs at least 2 steps");
    SolveGrid grid0 = s.grid_or_default(opt.grid_step);
    write_run_config(opt, "sweep", s, grid0);

    struct Point {
        double value = 0.0;
        bool valid = false;
        std::vector<BenchmarkRow> rows;
    };
    std::vector<Point> points(static_cast<std::size_t>(steps));
    parallel_for(points.size(), [&](std::size_t i) {
        Point& pt = points[i];
        pt.value = from + (to - from) * static_cast<double>(i) / (steps - 1);
        ModelParams raw = s.params;
        if (param == "sigma") raw.sigma = pt.value;
        else if (param == "c") raw.c = pt.value;
        else if (param == "pi") raw.pi = pt.value;
        else if (param == "beta") raw.beta = pt.value;
        else if (param == "l") raw.l = pt.value;
        else if (param == "L") raw.L = pt.value;
        else raise(ErrorKind::MalformedInput, "unknown sweep parameter: " + param);
        ModelParams p;
        try {
            p = validate_params(raw);
        } catch (const Error&) {
            return;  // outside the admissible region: row omitted
        }
        SolveGrid grid = default_grid(p, s.types, opt.grid_step);
        Tariff ceiling = Tariff::uniform(p.l);
        for (const FirmType& th : s.types) {
            auto fb = best_threshold_policy(th, regulator_launch_payoff(th, p), p, grid);
            auto ce =
                best_threshold_policy(th, firm_launch_payoff(th, ceiling, p), p, grid);
            BenchmarkRow row;
            row.theta = th.theta;
            row.first_best_launch = fb.policy.launch_level();
            row.first_best_abandon =
                fb.policy.interior_policy() ? fb.policy.abandon_at() : fb.policy.start();
            row.ceiling_launch = ce.policy.launch_level();
            row.ceiling_abandon =
                ce.policy.interior_policy() ? ce.policy.abandon_at() : ce.policy.start();
            row.first_best_value = fb.value;
            row.ceiling_value = ce.value;
            pt.rows.push_back(row);
        }
        pt.valid = true;
    });

    CsvWriter csv({"param", "value", "theta", "first_best_launch", "first_best_abandon",
                   "ceiling_launch", "ceiling_abandon"});
    for (const auto& pt : points) {
        if (!pt.valid) continue;
        for (const auto& r : pt.rows)
            csv.add_row({param, fmt_num(pt.value), fmt_num(r.theta),
                         fmt_num(r.first_best_launch), fmt_num(r.first_best_abandon),
                         fmt_num(r.ceiling_launch), fmt_num(r.ceiling_abandon)});
    }
    csv.write(out_path(opt, "sweep.csv"));
    std::cout << "wrote " << out_path(opt, "sweep.csv") << "\n";
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args) {
    CLI::App app{"Delegated-Wald liability design toolkit"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string tariff_name = "scenario";
    std::string sweep_param = "l";
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0;
    VerifyConfig vcfg;

    auto add_common = [&](CLI::App* sub, bool scenario_required = true) {
        auto* s = sub->add_option("--scenario", opt.scenario_path, "scenario JSON file");
        if (scenario_required) s->required();
        sub->add_option("--seed", opt.seed, "random seed");
        sub->add_option("--grid-step", opt.grid_step, "solver grid step h");
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--tol-v", opt.tol_v, "value tolerance override");
    };

    auto* bench = app.add_subcommand("benchmarks", "first-best vs ceiling thresholds");
    add_common(bench);
    auto* solve = app.add_subcommand("solve", "per-type solve under a tariff");
    add_common(solve);
    solve->add_option("--tariff", tariff_name, "zero | ceiling | scenario");
    auto* synth = app.add_subcommand("synthesize", "monotone tariff for targets");
    add_common(synth);
    auto* convert = app.add_subcommand("convert", "synthesis menu -> ceiling tariff");
    add_common(convert);
    auto* counter = app.add_subcommand("counterexample", "damage-independent fee menu");
    add_common(counter);
    auto* verify = app.add_subcommand("verify", "run all property suites");
    add_common(verify);
    verify->add_option("--prop1-sets", vcfg.prop1_sets, "parameter sets for Prop 1");
    verify->add_option("--lemma1-trials", vcfg.lemma1_trials, "trials for Lemma 1");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo oracle run");
    add_common(simulate);
    simulate->add_option("--tariff", tariff_name, "zero | ceiling | scenario");
    auto* sweep = app.add_subcommand("sweep", "threshold curves over a parameter");
    add_common(sweep);
    sweep->add_option("--param", sweep_param, "sigma|c|pi|beta|l|L")->required();
    sweep->add_option("--from", sweep_from, "range start")->required();
    sweep->add_option("--to", sweep_to, "range end")->required();
    sweep->add_option("--steps", sweep_steps, "number of points")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        Json err;
        err["error"] = {{"kind", "MalformedInput"},
                        {"message", e.what()},
                        {"exit_code", 2}};
        std::cerr << err.dump() << "\n";
        return 2;
    }

    try {
        if (bench->parsed()) cmd_benchmarks(opt);
        else if (solve->parsed()) cmd_solve(opt, tariff_name);
        else if (synth->parsed()) cmd_synthesize(opt);
        else if (convert->parsed()) cmd_convert(opt);
        else if (counter->parsed()) cmd_counterexample(opt);
        else if (verify->parsed()) return cmd_verify(opt, vcfg);
        else if (simulate->parsed()) cmd_simulate(opt, tariff_name);
        else if (sweep->parsed()) cmd_sweep(opt, sweep_param, sweep_from, sweep_to,
                                            sweep_steps);
        return 0;
    } catch (const Error& e) {
        int code = exit_code_for(e.kind());
        Json err;
        err["error"] = {{"kind", error_kind_name(e.kind())},
                        {"message", e.what()},
                        {"exit_code", code}};
        std::cerr << err.dump() << "\n";
        return code;
    } catch (const std::exception& e) {
        Json err;
        err["error"] = {{"kind", "Internal"}, {"message", e.what()}, {"exit_code", 3}};
        std::cerr << err.dump() << "\n";
        return 3;
    }
}

} // namespace wald::cli
