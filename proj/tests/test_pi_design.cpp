#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "buckforge/averaging.hpp"
#include "buckforge/error.hpp"
#include "buckforge/pi_design.hpp"
#include "oracles.hpp"

using namespace buckforge;
using Catch::Approx;

namespace {

const ConverterParams kRef = reference_design();

TransferFunction plant() { return derive(kRef).plant; }

double oracle_pm(double kp, double ki, double scale = 1.0) {
    return *oracle::dense_phase_margin({oracle::PlantOracle::from(kRef), kp, ki, scale}).pm;
}

}  // namespace

TEST_CASE("pi transfer function", "[pi]") {
    const auto c = pi_tf({0.23, 1.0});
    CHECK(c.num() == std::vector<double>{0.23, 1.0});
    CHECK(c.den() == std::vector<double>{1.0, 0.0});
    // Pure integral and pure proportional forms keep the origin pole.
    CHECK(pi_tf({0.0, 1.0}).num() == std::vector<double>{1.0});
    CHECK(pi_tf({2.0, 0.0}).den() == std::vector<double>{1.0, 0.0});

    CHECK_THROWS_AS(pi_tf({0.0, 0.0}), InvalidParameter);
    CHECK_THROWS_AS(pi_tf({-1.0, 1.0}), InvalidParameter);
    CHECK_THROWS_AS(pi_tf({1.0, -1.0}), InvalidParameter);
    CHECK_THROWS_AS(pi_tf({std::nan(""), 1.0}), InvalidParameter);
    try {
        pi_tf({1.0, -1.0});
    } catch (const InvalidParameter& e) {
        CHECK(e.field() == "ki");
    }
}

TEST_CASE("integral action dominates at low frequency", "[pi][property]") {
    for (double ki : {1e-3, 0.5, 1.0, 30.0}) {
        for (double kp : {0.0, 0.23, 10.0}) {
            CHECK(std::abs(evaluate(pi_tf({kp, ki}), 1e-6)) > 1e5 * ki);
        }
    }
}

TEST_CASE("compensated loop gains", "[pi]") {
    const auto g = plant();
    const PIGains gains{0.23, 1.0};
    const double w = 500.0;
    const auto plain = evaluate(compensated_loop(g, gains, {}, kRef), w);
    const auto mod = evaluate(compensated_loop(g, gains, {true, false}, kRef), w);
    const auto sensor = evaluate(compensated_loop(g, gains, {false, true}, kRef), w);
    const auto both = evaluate(compensated_loop(g, gains, {true, true}, kRef), w);
    // vs = 10 V: the modulator lowers the loop by exactly 20 dB.
    CHECK(magnitude_db(mod) - magnitude_db(plain) == Approx(-20.0).margin(1e-12));
    CHECK(std::abs(sensor / plain) == Approx(kRef.vref / kRef.vo_target).epsilon(1e-14));
    CHECK(std::abs(both / plain) == Approx(kRef.vref / (kRef.vo_target * kRef.vs)).epsilon(1e-14));
    CHECK(std::arg(both / plain) == Approx(0.0).margin(1e-14));

    // kp = 1, ki = 0 is the plant times 1 (with an extra s / s).
    const auto unit = compensated_loop(g, {1.0, 0.0}, {}, kRef);
    for (double wi : {1.0, 100.0, 1e4}) {
        CHECK(std::abs(evaluate(unit, wi) - evaluate(g, wi)) <= 1e-12 * std::abs(evaluate(g, wi)));
    }
}

TEST_CASE("phase margins match the dense oracle", "[pi][oracle]") {
    for (double kp : {0.01, 0.0337, 0.1, 0.23, 1.0, 10.0, 100.0}) {
        const auto pm = phase_margin_for(plant(), {kp, 1.0}, {}, kRef);
        REQUIRE(pm);
        CHECK(*pm == Approx(oracle_pm(kp, 1.0)).margin(0.01));
    }
    const auto hidden = phase_margin_for(plant(), {0.23, 1.0}, {true, true}, kRef);
    CHECK(*hidden == Approx(oracle_pm(0.23, 1.0, kRef.vref / (kRef.vo_target * kRef.vs))).margin(0.01));
    CHECK(*phase_margin_for(plant(), {0.1, 1.0}, {}, kRef) == Approx(74.73).margin(0.01));
    CHECK(*phase_margin_for(plant(), {1.0, 1.0}, {}, kRef) == Approx(23.07).margin(0.01));
}

TEST_CASE("phase margin falls as kp grows past the hump", "[pi][property]") {
    double prev = 1e9;
    for (int i = 0; i < 50; ++i) {
        const double kp = 0.23 * std::pow(10.0 / 0.23, i / 49.0);
        const double pm = *phase_margin_for(plant(), {kp, 1.0}, {}, kRef);
        REQUIRE(pm < prev);
        prev = pm;
    }
}

TEST_CASE("tuning round trip", "[pi][property]") {
    for (double kp : {0.1, 0.23, 1.0, 10.0}) {
        const double target = *phase_margin_for(plant(), {kp, 1.0}, {}, kRef);
        const auto r = tune_kp_for_pm(plant(), 1.0, target, {}, kRef);
        CHECK(r.gains.kp == Approx(kp).epsilon(0.05));
        CHECK(r.gains.ki == 1.0);
        CHECK(*r.margins.phase_margin_deg == Approx(target).margin(0.05));
    }
}

TEST_CASE("tuning targets", "[pi]") {
    const auto r75 = tune_kp_for_pm(plant(), 1.0, 75.0, {}, kRef);
    CHECK(r75.gains.kp == Approx(0.099327).epsilon(1e-4));
    CHECK(*r75.margins.phase_margin_deg == Approx(75.0).margin(0.05));

    const auto r48 = tune_kp_for_pm(plant(), 1.0, 48.5, {}, kRef);
    CHECK(r48.gains.kp == Approx(0.23).epsilon(0.01));

    // The hump peaks near 133 deg; 179.9 deg is never reached.
    try {
        tune_kp_for_pm(plant(), 1.0, 179.9, {}, kRef);
        FAIL("expected TargetUnreachable");
    } catch (const TargetUnreachable& e) {
        CHECK(e.target() == 179.9);
        CHECK(e.observed_max() < 179.9);
        CHECK(e.observed_max() == Approx(133.4).margin(1.0));
        CHECK(e.observed_min() < 1.0);
    }
    CHECK_THROWS_AS(tune_kp_for_pm(plant(), 1.0, 0.0, {}, kRef), InvalidParameter);
    CHECK_THROWS_AS(tune_kp_for_pm(plant(), 0.0, 45.0, {}, kRef), InvalidParameter);
}

TEST_CASE("published cases", "[pi]") {
    const auto a = published_case_for({0.23, 1.0});
    REQUIRE(a);
    CHECK(a->phase_margin_deg == 75.0);
    CHECK(a->phase_margin_is_lower_bound);
    CHECK(a->gain_margin_db == -0.151);
    const auto b = published_case_for({10.0, 1.0});
    REQUIRE(b);
    CHECK(b->phase_margin_deg == 10.0);
    CHECK(b->gain_margin_db == 0.0428);
    CHECK_FALSE(published_case_for({1.0, 1.0}));
}

TEST_CASE("design report for kp = 0.23, ki = 1", "[pi]") {
    const auto r = design_report(plant(), {0.23, 1.0}, {}, kRef);
    CHECK(r.closed_loop_dc_gain == Approx(1.0).epsilon(1e-12));
    REQUIRE(r.closed_loop_poles.size() == 3);
    for (const auto& z : r.closed_loop_poles) CHECK(z.real() < 0.0);
    REQUIRE(r.step.metrics);
    CHECK(r.step.metrics->final_value == Approx(1.0).margin(0.15));
    CHECK(r.step.metrics->max_overshoot_pct == Approx(23.70).margin(0.05));
    REQUIRE(r.published);
    CHECK_FALSE(r.published->phase_margin_reproduced);
    CHECK(*r.published->phase_margin_delta_deg == Approx(48.496 - 75.0).margin(1e-3));
    REQUIRE(r.published->notes.size() == 3);
    CHECK(r.published->notes[0].find("NOT reproduced") != std::string::npos);
    CHECK(r.published->notes[1].find("non-positive") != std::string::npos);
    CHECK(r.published->notes[2].find("never reaches -180") != std::string::npos);
    CHECK(*r.margins_hidden_gains.phase_margin_deg > *r.margins_plain.phase_margin_deg);
}

TEST_CASE("design report for kp = 10, ki = 1", "[pi]") {
    const auto hi = design_report(plant(), {10.0, 1.0}, {}, kRef);
    const auto lo = design_report(plant(), {0.23, 1.0}, {}, kRef);
    REQUIRE(hi.step.metrics);
    CHECK(hi.step.metrics->max_overshoot_pct > lo.step.metrics->max_overshoot_pct);
    CHECK(hi.step.metrics->max_overshoot_pct == Approx(81.9).margin(0.1));
    CHECK(*hi.margins.phase_margin_deg < *lo.margins.phase_margin_deg);
    REQUIRE(hi.published);
    CHECK(hi.published->phase_margin_reproduced);  // 7.3 deg is within 5 deg of the published 10
    CHECK(*hi.published->computed_phase_margin_deg == Approx(7.2793).margin(1e-3));
}

TEST_CASE("design report for a pure integral controller", "[pi]") {
    const auto r = design_report(plant(), {0.0, 1.0}, {}, kRef);
    CHECK_FALSE(r.published);
    CHECK(r.closed_loop_dc_gain == Approx(1.0).epsilon(1e-12));
    REQUIRE(r.step.metrics);
    CHECK(r.step.t_end > 0.05);
    CHECK(r.step.metrics->final_value == Approx(1.0).margin(0.01));
    CHECK(std::isfinite(r.step.metrics->settling_time));
}

TEST_CASE("unstable closed loop has no step metrics", "[pi]") {
    // A large integral gain violates the Routh condition a1 * a0 > K * ki.
    const auto r = design_report(plant(), {0.0, 100.0}, {}, kRef);
    bool any_unstable = false;
    for (const auto& z : r.closed_loop_poles) any_unstable = any_unstable || z.real() >= 0.0;
    CHECK(any_unstable);
    CHECK_FALSE(r.step.metrics);
    CHECK(r.step.note.find("unstable") != std::string::npos);
    CHECK_FALSE(r.margins.stable_loop);
}
