#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "test_helpers.hpp"
#include "wald/fee_example.hpp"
#include "wald/mechanism.hpp"

using namespace wald;
using Catch::Approx;
namespace wt = wald::testing;

namespace {
TypeSpace nine_priors() {
    TypeSpace t;
    for (int i = 1; i <= 9; ++i) t.push_back(FirmType{0.1 * i});
    return t;
}
}  // namespace

TEST_CASE("benchmarks: recklessness holds on P0 with a degenerate ceiling",
          "[mechanism]") {
    ModelParams p = wt::p0();
    TypeSpace types = nine_priors();
    SolveGrid grid = default_grid(p, types);
    BenchmarkThresholds b = benchmarks(p, types, grid);
    REQUIRE(b.rows.size() == 9);
    for (const auto& r : b.rows) {
        CHECK(r.first_best_launch < r.ceiling_launch - 2.0 * grid.h());
        CHECK(r.ceiling_launch == 0.0);  // cap below profit: launch immediately
    }
    // brute-force anchors for the first best at theta = 0.5
    CHECK(b.rows[4].first_best_launch == Approx(-1.6).margin(0.06));
    CHECK(b.rows[4].first_best_abandon == Approx(1.85).margin(0.06));
    // both threshold families weakly decreasing in theta
    for (std::size_t i = 1; i < b.rows.size(); ++i) {
        CHECK(b.rows[i].first_best_launch <=
              b.rows[i - 1].first_best_launch + 2.0 * grid.h());
        CHECK(b.rows[i].ceiling_launch <= b.rows[i - 1].ceiling_launch + 2.0 * grid.h());
    }
}

TEST_CASE("benchmarks: strict even when the social benefit exceeds the profit",
          "[mechanism]") {
    ModelParams p = validate_params(1.0, 0.04, 1.0, 1.5, 0.4, 4.0);
    REQUIRE(p.beta > p.pi);
    TypeSpace types = nine_priors();
    SolveGrid grid = default_grid(p, types);
    BenchmarkThresholds b = benchmarks(p, types, grid);
    for (const auto& r : b.rows)
        CHECK(r.first_best_launch < r.ceiling_launch - 2.0 * grid.h());
}

TEST_CASE("benchmarks: interior ceiling when the cap exceeds the profit",
          "[mechanism]") {
    ModelParams p = wt::p_cap_above_profit();
    TypeSpace types = {0.3, 0.5, 0.7};
    SolveGrid grid = default_grid(p, types);
    BenchmarkThresholds b = benchmarks(p, types, grid);
    for (const auto& r : b.rows) {
        if (r.theta >= 0.5) CHECK(std::isfinite(r.ceiling_launch));
        CHECK(r.first_best_launch < r.ceiling_launch - 2.0 * grid.h());
    }
}

TEST_CASE("ceiling_conversion: the uniform-ceiling menu is trivially equivalent",
          "[mechanism]") {
    ModelParams p = wt::p_cap_above_profit();
    TypeSpace types = {0.5, 0.7};
    SolveGrid grid = default_grid(p, types);
    std::vector<MenuItem> items;
    for (const FirmType& th : types) {
        ValueFunction vf = solve_general(th, Tariff::uniform(p.l), p, grid);
        items.push_back({th.theta, extract_thresholds(vf).launch_boundary, p.l});
    }
    DirectMechanism menu(items, p.l);
    CeilingConversion conv = ceiling_conversion(menu, p, grid);
    for (const auto& r : conv.rows) {
        CHECK(std::abs(r.achieved_threshold - r.designated_threshold) <= 2.0 * grid.h());
        CHECK(std::abs(r.achieved_value - r.menu_value) <= 1e-9 * p.pi);
    }
}

TEST_CASE("ceiling_conversion rejects non-IC menus", "[mechanism]") {
    ModelParams p = wt::p_cap_above_profit();
    SolveGrid grid = default_grid(p, {0.3, 0.7});
    // a deep subsidized point that the shallow type would chase
    DirectMechanism menu({{0.3, -1.0, -2.0}, {0.7, -0.1, p.l}}, p.l);
    CHECK_THROWS_MATCHES(ceiling_conversion(menu, p, grid), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::NotOutcomeEquivalent;
                         }));
}

TEST_CASE("single crossing: reflexive and upward", "[mechanism]") {
    // cheap information and a high cap make mid types prefer continuing
    ModelParams p = validate_params(1.0, 0.03, 1.0, 1.2, 1.4, 2.0);
    SolveGrid grid = default_grid(p, {0.4, 0.6});
    Tariff psi = Tariff::uniform(p.l);
    auto r = single_crossing_check(psi, 0.0, 0.4, 0.4, p, grid);
    CHECK(r.holds);  // reflexivity
    CHECK(r.b_term < p.pi);
    auto r2 = single_crossing_check(psi, 0.0, 0.4, 0.6, p, grid);
    REQUIRE(r2.theta_continues);
    CHECK(r2.theta_prime_continues);
    CHECK(r2.holds);
    CHECK(r2.a_term > p.pi);  // the comparison can only hold through the a-term
}

TEST_CASE("single crossing: randomized sweep finds no violation",
          "[mechanism][property]") {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int continuing = 0;
    for (int trial = 0; trial < 120; ++trial) {
        ModelParams p = wt::random_params(rng);
        SolveGrid grid = default_grid(p, {0.5});
        // random piecewise tariff bounded by the cap
        double b1 = -1.5 + 2.0 * u(rng);
        double b2 = b1 + 0.3 + 1.5 * u(rng);
        Tariff psi({b1, b2},
                   {p.l - 1.2 * p.pi * u(rng), p.l - 1.2 * p.pi * u(rng)},
                   p.l - 1.2 * p.pi * u(rng));
        double x = -1.0 + 2.0 * u(rng);
        double t1 = 0.05 + 0.6 * u(rng);
        double t2 = t1 + (0.95 - t1) * u(rng);
        auto r = single_crossing_check(psi, x, t1, t2, p, grid);
        CHECK(r.holds);
        CHECK(r.b_term < p.pi);
        continuing += r.theta_continues;
    }
    CHECK(continuing > 10);  // the sweep must exercise the non-vacuous branch
}

TEST_CASE("monotonicity_check: ceiling and piecewise admissible tariffs",
          "[mechanism]") {
    ModelParams p = wt::p_cap_above_profit();
    TypeSpace types = {0.2, 0.35, 0.5, 0.65, 0.8};
    SolveGrid grid = default_grid(p, types);
    auto mono = monotonicity_check(Tariff::uniform(p.l), types, p, grid);
    CHECK(mono.decreasing);

    // random mild non-decreasing step tariffs: steps often create discount
    // slivers that break the threshold form, so reject until admissible
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int admissible = 0;
    for (int trial = 0; trial < 40 && admissible < 2; ++trial) {
        double bp = -2.0 + 4.0 * u(rng);
        double def = p.l - 0.3 * p.pi * u(rng);
        Tariff psi({bp}, {p.l}, def);
        try {
            auto m = monotonicity_check(psi, types, p, grid);
            ++admissible;
            CHECK(m.decreasing);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InadmissibleTariff);
        }
    }
    CHECK(admissible >= 2);
}

TEST_CASE("synthesize_monotone: a ceiling target is a no-op", "[mechanism][synthesis]") {
    ModelParams p = wt::p_cap_above_profit();
    SolveGrid grid = default_grid(p, {0.5});
    ValueFunction vf = solve_general(0.5, Tariff::uniform(p.l), p, grid);
    double xl = extract_thresholds(vf).launch_boundary;
    SynthesisReport rep = synthesize_monotone({{0.5, xl}}, p, grid);
    CHECK(rep.tariff.is_constant());
    CHECK(rep.tariff.default_value() == p.l);
    CHECK(rep.rows[0].achieved == Approx(xl));
}

TEST_CASE("synthesize_monotone implements a two-type decreasing profile",
          "[mechanism][synthesis]") {
    ModelParams p = wt::p_cap_above_profit();
    TypeSpace types = {0.3, 0.6};
    SolveGrid grid = default_grid(p, types);
    double xl3 = extract_thresholds(solve_general(0.3, Tariff::uniform(p.l), p, grid))
                     .launch_boundary;
    double xl6 = extract_thresholds(solve_general(0.6, Tariff::uniform(p.l), p, grid))
                     .launch_boundary;
    REQUIRE(xl6 < xl3);
    std::vector<std::pair<double, double>> targets = {{0.3, xl3 - 0.2}, {0.6, xl6 - 0.3}};
    REQUIRE(targets[1].second < targets[0].second);

    SynthesisReport rep = synthesize_monotone(targets, p, grid);
    CHECK(rep.tariff.non_decreasing_segments());
    rep.tariff.validate_cap(p.l);
    CHECK(rep.max_deviation <= 2.0 * grid.h());
    for (const auto& row : rep.rows) {
        CHECK(std::abs(row.achieved - row.target) <= 2.0 * grid.h());
        CHECK(row.penalty <= p.l);
    }
    // the menu read off the synthesis is identifiable
    auto ident = identifiability_check(rep.menu);
    CHECK(ident.identifiable);
    CHECK(ident.cells.size() == 3);
}

TEST_CASE("synthesize_monotone rejects increasing targets", "[mechanism][synthesis]") {
    ModelParams p = wt::p_cap_above_profit();
    SolveGrid grid = default_grid(p, {0.3, 0.6});
    CHECK_THROWS_MATCHES(synthesize_monotone({{0.3, -1.0}, {0.6, -0.5}}, p, grid), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::PreconditionViolated;
                         }));
}

TEST_CASE("synthesis round-trips through the ceiling conversion",
          "[mechanism][synthesis]") {
    ModelParams p = wt::p_cap_above_profit();
    TypeSpace types = {0.35, 0.55, 0.75};
    SolveGrid grid = default_grid(p, types);
    std::vector<std::pair<double, double>> targets;
    double shift = 0.15;
    for (const FirmType& th : types) {
        double xl = extract_thresholds(solve_general(th, Tariff::uniform(p.l), p, grid))
                        .launch_boundary;
        targets.push_back({th.theta, xl - shift});
        shift += 0.15;
    }
    SynthesisReport rep = synthesize_monotone(targets, p, grid);
    CeilingConversion conv = ceiling_conversion(rep.menu, p, grid);
    REQUIRE(conv.rows.size() == 3);
    for (std::size_t i = 0; i < conv.rows.size(); ++i) {
        CHECK(std::abs(conv.rows[i].achieved_threshold - rep.rows[i].target) <=
              2.0 * grid.h());
        CHECK(std::abs(conv.rows[i].achieved_value - conv.rows[i].menu_value) <=
              1e-9 * p.pi);
    }
}

TEST_CASE("identifiability: distinct, colliding and empty menus", "[mechanism]") {
    ModelParams p = wt::p0();
    DirectMechanism distinct({{0.2, -0.4, 0.1}, {0.6, -0.9, 0.0}}, p.l);
    auto ok = identifiability_check(distinct);
    CHECK(ok.identifiable);
    CHECK(ok.cells.size() == 3);  // one per type plus the residual cell
    CHECK(ok.cells[0].singleton);
    CHECK_FALSE(ok.cells.back().singleton);

    DirectMechanism colliding({{0.2, -0.4, 0.1}, {0.6, -0.4, 0.1}}, p.l);
    auto bad = identifiability_check(colliding);
    CHECK_FALSE(bad.identifiable);
    REQUIRE(bad.collision.has_value());
    CHECK(bad.collision->first == 0.2);
    CHECK(bad.collision->second == 0.6);

    auto empty = identifiability_check(DirectMechanism{});
    CHECK(empty.identifiable);
    CHECK(empty.cells.size() == 1);
}
