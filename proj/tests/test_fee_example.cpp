#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_helpers.hpp"
#include "wald/fee_example.hpp"
#include "wald/simulate.hpp"

using namespace wald;
using Catch::Approx;
namespace wt = wald::testing;

namespace {
// P0 economics with the cap raised above the profit, as the example requires.
ModelParams fee_params() { return validate_params(1.0, 0.05, 1.0, 1.2, 1.2, 2.0); }
}  // namespace

TEST_CASE("fee_policy_value closed forms", "[fee]") {
    ModelParams p = fee_params();
    auto pol = ThresholdPolicy::interior(-1.0, 1.0, 0.0);
    // zero fee, safe type: same arithmetic as the firm value at theta = 0
    CHECK(fee_policy_value(0, pol, 0.0, p) == Approx(0.8427173702).epsilon(1e-9));
    // fee equal to the profit leaves only the information cost
    CHECK(fee_policy_value(1, pol, p.pi, p) < 0.0);
    // immediate actions
    CHECK(fee_policy_value(1, ThresholdPolicy::immediate_launch(0.0), 0.3, p) ==
          Approx(p.pi - 0.3));
    CHECK(fee_policy_value(0, ThresholdPolicy::immediate_abandon(0.0), 0.3, p) == 0.0);
}

TEST_CASE("a fee at the cap deters launching outright", "[fee]") {
    ModelParams p = fee_params();
    SolveGrid grid = default_grid(p, {});
    // launch payoff pi - l < 0: every interior strategy is dominated by
    // abandoning immediately
    auto choice = best_abandon_given_launch(1, -0.5, p.l, p, grid);
    CHECK(choice.policy.kind() == ThresholdPolicy::Kind::ImmediateAbandon);
    CHECK(choice.value == 0.0);
}

TEST_CASE("best_abandon_given_launch: viable when the fee is low and the point is near 0",
          "[fee]") {
    ModelParams p = fee_params();
    SolveGrid grid = default_grid(p, {});
    auto choice = best_abandon_given_launch(1, -0.1, 0.25 * p.pi, p, grid);
    REQUIRE(choice.policy.interior_policy());
    CHECK(choice.policy.abandon_at() > 0.1);
    CHECK(choice.value > 0.0);
    // the safe type's value falls as the fee rises, thresholds held fixed
    double v1 = fee_policy_value(0, ThresholdPolicy::interior(-0.1, 1.0, 0.0), 0.1, p);
    double v2 = fee_policy_value(0, ThresholdPolicy::interior(-0.1, 1.0, 0.0), 0.3, p);
    CHECK(v1 > v2);
    CHECK_THROWS_AS(best_abandon_given_launch(1, 0.5, 0.1, p, grid), Error);
}

TEST_CASE("mimic gap is positive on the lower half-interval", "[fee]") {
    ModelParams p = fee_params();
    auto strat = ThresholdPolicy::interior(-1.0, 1.0, -0.5);
    MimicGap g = mimic_payoff_gap(strat, 0.0, -0.5, p);
    CHECK(g.gap > 0.0);
    CHECK(g.T_b > g.T_g);
    CHECK(g.f_g + g.f_b > 1.0);
    // just below the midpoint the time terms wash out
    MimicGap gm = mimic_payoff_gap(strat, 0.0, -1e-9, p);
    CHECK(gm.gap == Approx((gm.f_g - gm.f_b) * p.pi).margin(1e-6));
    CHECK_THROWS_MATCHES(mimic_payoff_gap(strat, 0.0, 0.2, p), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::DomainError;
                         }));
    CHECK_THROWS_AS(mimic_payoff_gap(strat, 1.5, -0.5, p), Error);  // fee above pi
}

TEST_CASE("mimic gap components agree with simulation", "[fee][oracle]") {
    ModelParams p = fee_params();
    double eta = 0.2;
    auto strat = ThresholdPolicy::interior(-1.0, 1.0, -0.5);
    MimicGap g = mimic_payoff_gap(strat, eta, -0.5, p);
    SimConfig cfg;
    cfg.n_paths = 30000;
    cfg.seed = 321;
    for (int y : {0, 1}) {
        auto emp = simulate_exit(y, strat, cfg, p.sigma);
        double closed_f = y == 1 ? g.f_b : g.f_g;
        double closed_T = y == 1 ? g.T_b : g.T_g;
        CHECK(std::abs(emp.f - closed_f) <= 3.0 * emp.f_se);
        CHECK(std::abs(emp.T - closed_T) <= 3.0 * emp.T_se);
    }
}

TEST_CASE("construct_violation_menu certifies the reversal", "[fee]") {
    ModelParams p = fee_params();
    SolveGrid grid = default_grid(p, {});
    FeeCertification cert = construct_violation_menu(p, grid);

    // the safe type launches strictly deeper: monotonicity reversed
    CHECK(cert.menu.safe_launch < cert.menu.damaging_launch);
    CHECK(cert.menu.damaging_launch < 0.0);
    CHECK(cert.menu.damaging_abandon > std::abs(cert.menu.damaging_launch));
    CHECK(std::abs(cert.safe_indifference_residual) < 1e-9 * p.pi);
    CHECK(cert.damaging_margin > 0.0);
    CHECK(cert.menu.safe_fee <= p.l);
    CHECK(cert.menu.damaging_fee <= p.l);
    CHECK(std::abs(cert.damaging_solve_launch - cert.menu.damaging_launch) <=
          2.0 * grid.h());
    if (!cert.damaging_deviation_abandons) CHECK(cert.mimic_gap_at_x1 > 0.0);
    REQUIRE_FALSE(cert.trace.empty());
    CHECK(cert.trace.back().reached_stage == 3);

    // distinct thresholds make the menu identifiable
    auto ident = identifiability_check(fee_menu_as_mechanism(cert.menu, p));
    CHECK(ident.identifiable);
}

TEST_CASE("the fee example requires the cap above the profit", "[fee]") {
    ModelParams p = wt::p0();  // l = 0.8 < pi = 1
    SolveGrid grid = default_grid(p, {});
    CHECK_THROWS_MATCHES(construct_violation_menu(p, grid), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::PreconditionViolated;
                         }));
}
