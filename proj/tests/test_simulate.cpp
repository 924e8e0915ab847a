#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_helpers.hpp"
#include "wald/diffusion.hpp"
#include "wald/simulate.hpp"
#include "wald/solver.hpp"

using namespace wald;
using Catch::Approx;
namespace wt = wald::testing;

namespace {
SimConfig quick_cfg(std::uint64_t seed, std::size_t n = 20000) {
    SimConfig cfg;
    cfg.n_paths = n;
    cfg.seed = seed;
    cfg.dt = 1e-3;
    return cfg;
}
}  // namespace

TEST_CASE("simulated exit frequencies match the scale-function forms", "[simulate]") {
    auto pol = ThresholdPolicy::interior(-1.0, 1.0, 0.0);
    auto cfg = quick_cfg(20240801);

    auto rb = simulate_exit(1, pol, cfg, 1.0);
    double fb = hit_lower_prob(0.0, -1.0, 1.0, +1.0, 1.0);
    double Tb = expected_exit_time(0.0, -1.0, 1.0, +1.0, 1.0);
    CHECK(std::abs(rb.f - fb) <= 3.0 * rb.f_se);
    CHECK(std::abs(rb.T - Tb) <= 3.0 * rb.T_se);

    auto rg = simulate_exit(0, pol, cfg, 1.0);
    double fg = hit_lower_prob(0.0, -1.0, 1.0, -1.0, 1.0);
    CHECK(std::abs(rg.f - fg) <= 3.0 * rg.f_se);
    CHECK(std::abs(rg.T - Tb) <= 3.0 * rg.T_se);

    // symmetric boundaries, midpoint start: frequencies sum to one
    double joint_se = std::sqrt(rb.f_se * rb.f_se + rg.f_se * rg.f_se);
    CHECK(std::abs(rb.f + rg.f - 1.0) <= 3.0 * joint_se);
}

TEST_CASE("simulation is bit-identical under a fixed seed", "[simulate]") {
    auto pol = ThresholdPolicy::interior(-0.8, 1.2, 0.0);
    auto cfg = quick_cfg(7, 5000);
    auto r1 = simulate_exit(1, pol, cfg, 0.9);
    auto r2 = simulate_exit(1, pol, cfg, 0.9);
    CHECK(r1.f == r2.f);
    CHECK(r1.T == r2.T);
    auto r3 = simulate_exit(1, pol, SimConfig{1e-3, 5000, 8, 1000.0}, 0.9);
    CHECK(r1.f != r3.f);  // different seed, different draws
}

TEST_CASE("estimate_policy_value matches firm_policy_value", "[simulate]") {
    ModelParams p = wt::p0();
    Tariff psi = Tariff::uniform(p.l);
    auto pol = ThresholdPolicy::interior(-1.0, 1.0, 0.0);
    auto cfg = quick_cfg(99, 30000);

    auto est0 = estimate_policy_value(0.0, pol, psi, cfg, p);
    CHECK(std::abs(est0.mean - 0.8427173702) <= 3.0 * est0.se);

    auto est = estimate_policy_value(0.5, pol, psi, cfg, p);
    double closed = firm_policy_value(0.5, pol, psi, p);
    CHECK(std::abs(est.mean - closed) <= 3.0 * est.se);
}

TEST_CASE("degenerate immediate launch has zero standard error", "[simulate]") {
    ModelParams p = wt::p0();
    auto est = estimate_policy_value(1.0, ThresholdPolicy::immediate_launch(0.0),
                                     Tariff::uniform(p.l), quick_cfg(3, 2000), p);
    CHECK(est.mean == Approx(p.pi - p.l).margin(1e-15));
    CHECK(est.se == 0.0);
}

TEST_CASE("regulator estimate matches regulator_policy_value", "[simulate]") {
    ModelParams p = wt::p0();
    auto pol = ThresholdPolicy::interior(-1.0, 1.0, 0.0);
    auto cfg = quick_cfg(1234, 30000);
    auto est = estimate_regulator_value(0.4, pol, cfg, p);
    double closed = regulator_policy_value(0.4, pol, p);
    CHECK(std::abs(est.mean - closed) <= 3.0 * est.se);
}

TEST_CASE("halving dt moves exit estimates toward the closed forms", "[simulate]") {
    // dt levels coarse enough that the O(dt) time bias dominates the noise
    auto pol = ThresholdPolicy::interior(-1.0, 1.0, 0.0);
    double Tb = expected_exit_time(0.0, -1.0, 1.0, +1.0, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double dt : {6.4e-2, 1.6e-2, 4e-3}) {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.n_paths = 200000;
        cfg.seed = 555;
        auto r = simulate_exit(1, pol, cfg, 1.0);
        double err = std::abs(r.T - Tb);
        CHECK(err < prev + 2.0 * r.T_se);
        prev = err;
    }
}

TEST_CASE("config validation and truncation guard", "[simulate]") {
    auto pol = ThresholdPolicy::interior(-1.0, 1.0, 0.0);
    SimConfig bad;
    bad.n_paths = 10;
    CHECK_THROWS_AS(simulate_exit(1, pol, bad, 1.0), Error);
    SimConfig tight;
    tight.n_paths = 2000;
    tight.max_time = 0.05;  // nearly every path truncates
    tight.seed = 11;
    CHECK_THROWS_MATCHES(simulate_exit(1, pol, tight, 1.0), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::TruncationExceeded;
                         }));
}
