#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "test_helpers.hpp"
#include "wald/model.hpp"
#include "wald/policy.hpp"
#include "wald/tariff.hpp"

using namespace wald;
using Catch::Approx;

TEST_CASE("validate_params accepts the reference set and attaches k", "[model]") {
    ModelParams p = validate_params(1.0, 0.05, 1.0, 1.2, 0.8, 2.0);
    CHECK(p.k == Approx(0.52).epsilon(1e-12));
}

TEST_CASE("validate_params rejects l >= L", "[model]") {
    CHECK_THROWS_MATCHES(validate_params(1.0, 0.05, 1.0, 0.5, 1.2, 1.0), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::CapViolation;
                         }));
}

TEST_CASE("validate_params enforces the ordered cost-benefit ratios", "[model]") {
    // l/pi = 0.8 >= L/beta = 0.5
    CHECK_THROWS_MATCHES(validate_params(1.0, 0.05, 1.0, 4.0, 0.8, 2.0), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::AssumptionViolation;
                         }));
}

TEST_CASE("validate_params rejects non-positive fields", "[model]") {
    CHECK_THROWS_AS(validate_params(0.0, 0.05, 1.0, 1.2, 0.8, 2.0), Error);
    CHECK_THROWS_AS(validate_params(1.0, -0.05, 1.0, 1.2, 0.8, 2.0), Error);
    CHECK_THROWS_AS(validate_params(1.0, 0.05, 1.0, 1.2, -0.8, 2.0), Error);
}

TEST_CASE("validate_params accepts exactly the admissible random tuples", "[model][property]") {
    std::mt19937_64 rng(20240811);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    int accepted = 0;
    for (int i = 0; i < 2000; ++i) {
        double sigma = u(rng), c = u(rng), pi = u(rng), beta = u(rng), l = u(rng),
               L = u(rng);
        bool admissible = l < L && l * beta < L * pi;
        bool ok = true;
        try {
            ModelParams p = validate_params(sigma, c, pi, beta, l, L);
            CHECK(p.k > 0.0);
        } catch (const Error&) {
            ok = false;
        }
        CHECK(ok == admissible);
        accepted += ok;
    }
    CHECK(accepted > 100);  // the generator must exercise both outcomes
}

TEST_CASE("tariff evaluation: constants, segments, overrides", "[model][tariff]") {
    Tariff uniform = Tariff::uniform(0.8);
    CHECK(uniform(0.3) == 0.8);

    Tariff ceiling({}, {}, 0.8, {{-0.5, 0.2}});
    CHECK(ceiling(-0.5) == 0.2);
    CHECK(ceiling(-0.5001) == 0.8);
    CHECK(ceiling(-0.4999) == 0.8);

    // segments are left-open right-closed; the breakpoint belongs below
    Tariff steps({-1.0, 0.5}, {0.1, 0.4}, -0.2);
    CHECK(steps(-2.0) == -0.2);
    CHECK(steps(-1.0) == -0.2);
    CHECK(steps(-0.999) == 0.1);
    CHECK(steps(0.5) == 0.1);
    CHECK(steps(0.501) == 0.4);
    CHECK(steps(10.0) == 0.4);
}

TEST_CASE("tariff cap validation and construction errors", "[model][tariff]") {
    Tariff t({0.0}, {0.5}, 0.2, {{1.0, -3.0}});
    CHECK_NOTHROW(t.validate_cap(0.8));
    CHECK_THROWS_AS(t.validate_cap(0.4), Error);
    CHECK_THROWS_AS(Tariff({1.0, 1.0}, {0.1, 0.2}, 0.0), Error);
    CHECK_THROWS_AS(Tariff({0.0}, {0.1, 0.2}, 0.0), Error);
    CHECK_THROWS_AS(Tariff({}, {}, 0.0, {{0.5, 0.1}, {0.5, 0.2}}), Error);
}

TEST_CASE("tariff never exceeds the cap after validation", "[model][tariff][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        double cap = 0.5 + 0.5 * std::abs(u(rng));
        double b0 = u(rng);
        std::vector<double> bps = {b0, b0 + 0.5 + std::abs(u(rng))};
        std::vector<double> vals = {cap * u(rng), cap * u(rng)};
        Tariff t(bps, vals, cap * u(rng), {{3.0, cap * u(rng)}});
        t.validate_cap(cap);
        for (int i = 0; i < 50; ++i) {
            double x = 6.0 * u(rng);
            CHECK(t(x) <= cap);
        }
    }
}

TEST_CASE("threshold policy factories and degenerate tagging", "[model][policy]") {
    auto pol = ThresholdPolicy::interior(-1.0, 1.0, 0.0);
    CHECK(pol.interior_policy());
    CHECK(pol.launch_level() == -1.0);
    CHECK_THROWS_AS(ThresholdPolicy::interior(0.5, 1.0, 0.0), Error);

    auto launch = ThresholdPolicy::immediate_launch(0.0);
    CHECK(launch.launch_level() == 0.0);
    auto abandon = ThresholdPolicy::immediate_abandon(0.0);
    CHECK(abandon.launch_level() == -std::numeric_limits<double>::infinity());
}

TEST_CASE("direct mechanisms reject equal thresholds with unequal penalties",
          "[model][mechanism]") {
    double cap = 0.8;
    CHECK_NOTHROW(DirectMechanism({{0.3, -0.5, 0.5}, {0.7, -0.5, 0.5}}, cap));
    CHECK_THROWS_MATCHES(DirectMechanism({{0.3, -0.5, 0.5}, {0.7, -0.5, 0.6}}, cap),
                         Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::InconsistentMenu;
                         }));
    CHECK_THROWS_AS(DirectMechanism({{0.3, -0.5, 0.9}}, cap), Error);
}

TEST_CASE("firm type range checks", "[model]") {
    CHECK_NOTHROW(FirmType{0.0});
    CHECK_NOTHROW(FirmType{1.0});
    CHECK_THROWS_AS(FirmType{1.2}, Error);
    CHECK_THROWS_AS(FirmType{-0.1}, Error);
}
