#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "buckforge/averaging.hpp"
#include "buckforge/error.hpp"
#include "buckforge/lti.hpp"
#include "buckforge/pi_design.hpp"
#include "oracles.hpp"

using namespace buckforge;
using Catch::Approx;

namespace {

const ConverterParams kRef = reference_design();

TransferFunction plant() { return derive(kRef).plant; }

TransferFunction pi_loop(double kp, double ki) { return series(plant(), pi_tf({kp, ki})); }

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Random stable polynomial of the given degree, built from random stable roots.
std::vector<double> random_stable_den(std::mt19937_64& rng, int degree) {
    std::uniform_real_distribution<double> re(-100.0, -0.1);
    std::uniform_real_distribution<double> im(0.0, 100.0);
    std::vector<double> p{1.0};
    int remaining = degree;
    while (remaining > 0) {
        if (remaining >= 2 && rng() % 2 == 0) {
            const double a = re(rng), b = im(rng);
            p = poly_multiply(p, std::vector<double>{1.0, -2.0 * a, a * a + b * b});
            remaining -= 2;
        } else {
            p = poly_multiply(p, std::vector<double>{1.0, -re(rng)});
            remaining -= 1;
        }
    }
    return p;
}

}  // namespace

TEST_CASE("transfer function construction", "[lti]") {
    const TransferFunction tf({0.0, 0.0, 2.0}, {0.0, 1.0, 3.0});
    CHECK(tf.num() == std::vector<double>{2.0});
    CHECK(tf.den() == std::vector<double>{1.0, 3.0});
    CHECK(tf.is_proper());
    CHECK_FALSE(TransferFunction({1.0, 0.0, 0.0}, {1.0, 1.0}).is_proper());
    CHECK(TransferFunction({0.0}, {1.0}).is_zero());
    CHECK_THROWS_AS(TransferFunction({1.0}, {}), InvalidParameter);
    CHECK_THROWS_AS(TransferFunction({1.0}, {0.0, 0.0}), InvalidParameter);
}

TEST_CASE("evaluate on the imaginary axis", "[lti]") {
    const auto g = plant();
    const auto dc = evaluate(g, 0.0);
    CHECK(std::abs(dc) == Approx(3999960.0 / 135998.4).epsilon(1e-4));
    CHECK(std::arg(dc) == 0.0);

    const TransferFunction integrator({1.0}, {1.0, 0.0});
    const auto v = evaluate(integrator, 1.0);
    CHECK(std::abs(v) == Approx(1.0));
    CHECK(deg(std::arg(v)) == Approx(-90.0));

    // Real part of the plant denominator vanishes at w^2 = det A.
    const double w = std::sqrt(g.den()[2]);
    CHECK(w == Approx(368.8).margin(0.1));
    CHECK(deg(std::arg(evaluate(g, w))) == Approx(-90.0).margin(1e-9));
    CHECK(deg(std::arg(evaluate(g, 368.8))) == Approx(-90.0).margin(0.05));

    CHECK_THROWS_AS(evaluate(integrator, 0.0), PoleOnImaginaryAxis);
    const TransferFunction resonator({1.0}, {1.0, 0.0, 4.0});
    CHECK_THROWS_AS(evaluate(resonator, 2.0), PoleOnImaginaryAxis);
    CHECK_THROWS_AS(evaluate(g, -1.0), InvalidParameter);
}

TEST_CASE("bode sweep", "[lti]") {
    const auto sweep = bode_sweep(plant(), 1.0, 1e6, 50);
    REQUIRE(sweep.size() == 301);
    CHECK(sweep.front().omega == 1.0);
    CHECK(sweep.back().omega == 1e6);
    CHECK(sweep.front().magnitude_db == Approx(20.0 * std::log10(29.41)).margin(0.01));
    CHECK(sweep.front().magnitude_db == Approx(29.37).margin(0.01));
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        REQUIRE(sweep[i].omega > sweep[i - 1].omega);
    }
    CHECK(sweep.back().phase_deg == Approx(-180.0).margin(0.1));

    for (const auto& pt : bode_sweep(TransferFunction::constant(1.0), 1e-2, 1e3, 10)) {
        CHECK(pt.magnitude_db == 0.0);
        CHECK(pt.phase_deg == 0.0);
    }

    const auto integ = bode_sweep(TransferFunction({1.0}, {1.0, 0.0}), 1e-2, 1e4, 10);
    for (const auto& pt : integ) {
        CHECK(pt.magnitude_db == Approx(-20.0 * std::log10(pt.omega)).margin(1e-9));
        CHECK(pt.phase_deg == Approx(-90.0).margin(1e-9));
    }

    CHECK_THROWS_AS(bode_sweep(plant(), 0.0, 1.0, 10), InvalidParameter);
    CHECK_THROWS_AS(bode_sweep(plant(), 10.0, 1.0, 10), InvalidParameter);
    CHECK_THROWS_AS(bode_sweep(plant(), 1.0, 10.0, 0), InvalidParameter);
}

TEST_CASE("bode magnitude is 20 log10 of evaluate at every point", "[lti][property]") {
    const auto loop = pi_loop(0.23, 1.0);
    for (const auto& pt : bode_sweep(loop, 1e-2, 1e7, 100)) {
        REQUIRE(pt.magnitude_db == 20.0 * std::log10(std::abs(evaluate(loop, pt.omega))));
    }
}

TEST_CASE("phase unwrapping is continuous and anchored", "[lti][property]") {
    for (double kp : {0.0, 0.1, 0.23, 1.0, 10.0}) {
        const auto loop = series(plant(), pi_tf({kp, 1.0}));
        const auto sweep = bode_sweep(loop, 1e-2, 1e7, 100);
        const oracle::PiLoopOracle ref{oracle::PlantOracle::from(kRef), kp, 1.0};
        CHECK(sweep.front().phase_deg == Approx(ref.phase_deg(1e-2)).margin(1e-9));
        for (std::size_t i = 1; i < sweep.size(); ++i) {
            REQUIRE(std::abs(sweep[i].phase_deg - sweep[i - 1].phase_deg) < 180.0);
        }
    }
    // Double integrator: anchored at -180, not +180.
    const auto dbl = bode_sweep(TransferFunction({1.0, 1.0}, {1.0, 0.0, 0.0}), 1e-3, 1e3, 20);
    CHECK(dbl.front().phase_deg == Approx(-180.0).margin(0.1));
    CHECK(dbl.back().phase_deg == Approx(-90.0).margin(0.1));
}

TEST_CASE("margins of an integrator", "[lti]") {
    const auto m = stability_margins(TransferFunction({1.0}, {1.0, 0.0}));
    REQUIRE(m.gain_crossover);
    CHECK(*m.gain_crossover == Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(m.phase_crossover);
    CHECK(std::isinf(m.gain_margin_db));
    CHECK(*m.phase_margin_deg == Approx(90.0).margin(1e-9));
    CHECK(m.stable_loop);
    CHECK(m.gain_crossover_count == 1);
    CHECK(m.phase_crossover_count == 0);
}

TEST_CASE("margin for kp = 10, ki = 1 agrees with the dense oracle", "[lti][oracle]") {
    const auto m = stability_margins(pi_loop(10.0, 1.0));
    const auto oracle = oracle::dense_phase_margin({oracle::PlantOracle::from(kRef), 10.0, 1.0});
    REQUIRE(m.phase_margin_deg);
    REQUIRE(oracle.pm);
    CHECK(*m.phase_margin_deg >= 6.0);
    CHECK(*m.phase_margin_deg <= 12.0);
    CHECK(*m.phase_margin_deg == Approx(*oracle.pm).margin(0.01));
    CHECK(*m.phase_margin_deg == Approx(7.2793).margin(1e-3));  // frozen oracle value
    CHECK(*m.gain_crossover == Approx(*oracle.omega_gain).epsilon(1e-6));
    CHECK_FALSE(m.phase_crossover);  // phase stays above -180 deg for every PI setting
    CHECK(m.stable_loop);
}

TEST_CASE("margin for kp = 0.23, ki = 1 agrees with the dense oracle", "[lti][oracle]") {
    const auto m = stability_margins(pi_loop(0.23, 1.0));
    const auto oracle = oracle::dense_phase_margin({oracle::PlantOracle::from(kRef), 0.23, 1.0});
    REQUIRE(m.phase_margin_deg);
    CHECK(*m.phase_margin_deg == Approx(*oracle.pm).margin(0.01));
    CHECK(*m.phase_margin_deg == Approx(48.496).margin(1e-3));  // frozen oracle value
    CHECK(*m.gain_crossover == Approx(861.5).margin(0.1));

    // Hand check at the crossover: |L| = 1 there.
    const double mag = std::abs(oracle::PiLoopOracle{oracle::PlantOracle::from(kRef), 0.23, 1.0}.value(861.5));
    CHECK(mag == Approx(1.0).margin(1e-3));
}

TEST_CASE("margin report self-consistency", "[lti][property]") {
    for (double kp : {1e-3, 0.05, 0.1, 0.23, 1.0, 3.0, 10.0, 100.0}) {
        const auto loop = pi_loop(kp, 1.0);
        const auto m = stability_margins(loop);
        REQUIRE(m.gain_crossover);
        REQUIRE(std::abs(evaluate(loop, *m.gain_crossover)) == Approx(1.0).epsilon(1e-8));
    }
    // A third-order loop with a genuine phase crossover.
    const TransferFunction cubic({8.0}, poly_multiply(std::vector<double>{1.0, 1.0},
                                                      poly_multiply(std::vector<double>{1.0, 1.0},
                                                                    std::vector<double>{1.0, 1.0})));
    const auto m = stability_margins(cubic);
    REQUIRE(m.phase_crossover);
    // (s+1)^3 reaches -180 deg at w = sqrt(3), where |L| = 8/8 = 1.
    CHECK(*m.phase_crossover == Approx(std::sqrt(3.0)).epsilon(1e-9));
    CHECK(m.gain_margin_db == Approx(0.0).margin(1e-8));
    const auto sweep = bode_sweep(cubic, 1e-2, 1e7, 400);
    std::size_t i = 0;
    while (sweep[i + 1].omega < *m.phase_crossover) ++i;
    const double ph = sweep[i].phase_deg + deg(std::arg(evaluate(cubic, *m.phase_crossover) / evaluate(cubic, sweep[i].omega)));
    CHECK(ph == Approx(-180.0).margin(1e-6));

    const TransferFunction cubic4({4.0}, cubic.den());
    const auto m4 = stability_margins(cubic4);
    CHECK(m4.gain_margin_db == Approx(20.0 * std::log10(2.0)).margin(1e-8));
    CHECK(m4.stable_loop);
    const TransferFunction cubic16({16.0}, cubic.den());
    const auto m16 = stability_margins(cubic16);
    CHECK(m16.gain_margin_db == Approx(-20.0 * std::log10(2.0)).margin(1e-8));
    CHECK(*m16.phase_margin_deg < 0.0);
    CHECK_FALSE(m16.stable_loop);
}

TEST_CASE("multiple crossings are counted", "[lti]") {
    // Lightly damped resonance lifts |L| back above 0 dB: 3 crossings.
    const TransferFunction g({0.5 * 1e4}, poly_multiply(std::vector<double>{1.0, 0.0},
                                                        std::vector<double>{1.0, 0.2, 1e4}));
    const auto m = stability_margins(g);
    CHECK(m.gain_crossover_count == 3);
    REQUIRE(m.gain_crossover);
    CHECK(*m.gain_crossover == Approx(0.5).epsilon(1e-3));
}

TEST_CASE("close unity loop", "[lti]") {
    const auto cl = close_unity_loop(plant());
    REQUIRE(cl.den().size() == 3);
    CHECK(cl.num()[0] == Approx(3999960.0).epsilon(1e-3));
    CHECK(cl.den()[1] == Approx(803.333).epsilon(1e-3));
    CHECK(cl.den()[2] == Approx(4135958.4).epsilon(1e-3));
    CHECK(cl.den()[2] == plant().den()[2] + plant().num()[0]);

    const auto half = close_unity_loop(TransferFunction::constant(1.0));
    CHECK(half.num() == std::vector<double>{1.0});
    CHECK(half.den() == std::vector<double>{2.0});

    const auto first = close_unity_loop(TransferFunction({1.0}, {1.0, 0.0}));
    CHECK(first.den() == std::vector<double>{1.0, 1.0});

    CHECK_THROWS_AS(close_unity_loop(TransferFunction::constant(-1.0)), std::domain_error);
}

TEST_CASE("closed loop agrees with complex arithmetic", "[lti][property]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> coef(-5.0, 5.0);
    std::uniform_real_distribution<double> logw(-2.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const int degree = 1 + static_cast<int>(rng() % 3);
        const int num_degree = static_cast<int>(rng() % static_cast<unsigned>(degree + 1));
        std::vector<double> num(static_cast<std::size_t>(num_degree) + 1);
        for (double& c : num) c = coef(rng);
        const TransferFunction g(num, random_stable_den(rng, degree));
        TransferFunction cl = TransferFunction::constant(1.0);
        try {
            cl = close_unity_loop(g);
        } catch (const std::domain_error&) {
            continue;
        }
        const double w = std::pow(10.0, logw(rng));
        const auto gv = evaluate(g, w);
        const auto expected = gv / (1.0 + gv);
        const auto got = polyval(cl.num(), {0.0, w}) / polyval(cl.den(), {0.0, w});
        REQUIRE(std::abs(got - expected) <= 1e-10 * std::abs(expected) + 1e-300);
    }
}

TEST_CASE("series product", "[lti]") {
    const auto loop = pi_loop(0.23, 1.0);
    const auto g = plant();
    REQUIRE(loop.num().size() == 2);
    CHECK(loop.num()[0] == Approx(g.num()[0] * 0.23).epsilon(1e-15));
    CHECK(loop.num()[1] == Approx(g.num()[0]).epsilon(1e-15));
    CHECK(loop.den() == std::vector<double>{1.0, g.den()[1], g.den()[2], 0.0});

    CHECK(series(g, TransferFunction::constant(1.0)) == g);
    const auto ss = series(TransferFunction({1.0}, {1.0, 0.0}), TransferFunction({1.0, 0.0}, {1.0}));
    CHECK(ss.num() == std::vector<double>{1.0, 0.0});
    CHECK(ss.den() == std::vector<double>{1.0, 0.0});
}

TEST_CASE("poles", "[lti]") {
    const auto p = poles(plant());
    REQUIRE(p.size() == 2);
    // The discriminant 803.333^2 - 4 * 136000 is positive: two real poles.
    const double a1 = plant().den()[1], a0 = plant().den()[2];
    const double disc = a1 * a1 - 4.0 * a0;
    REQUIRE(disc > 0.0);
    const double r1 = 0.5 * (-a1 - std::sqrt(disc));
    const double r2 = 0.5 * (-a1 + std::sqrt(disc));
    CHECK(p[0].imag() == 0.0);
    CHECK(p[1].imag() == 0.0);
    CHECK(std::min(p[0].real(), p[1].real()) == Approx(r1).epsilon(1e-12));
    CHECK(std::max(p[0].real(), p[1].real()) == Approx(r2).epsilon(1e-12));
    CHECK(r1 == Approx(-560.84).margin(0.01));
    CHECK(r2 == Approx(-242.49).margin(0.01));

    const auto pm = poles(TransferFunction({1.0}, {1.0, 0.0, -1.0}));
    CHECK(std::max(pm[0].real(), pm[1].real()) == Approx(1.0));
    CHECK(std::min(pm[0].real(), pm[1].real()) == Approx(-1.0));

    const auto triple = poles(TransferFunction({1.0}, {1.0, 0.0, 0.0, 0.0}));
    REQUIRE(triple.size() == 3);
    for (const auto& z : triple) CHECK(std::abs(z) == 0.0);

    const auto complex_pair = poles(TransferFunction({1.0}, {1.0, 2.0, 5.0}));
    CHECK(complex_pair[0].real() == Approx(-1.0));
    CHECK(std::abs(complex_pair[0].imag()) == Approx(2.0));

    CHECK_THROWS_AS(poles(TransferFunction({1.0}, {1.0, 0.0, 0.0, 0.0, 1.0})), UnsupportedDegree);
    CHECK(poles(TransferFunction::constant(3.0)).empty());
}

TEST_CASE("pole residuals are tiny", "[lti][property]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coef(-1e3, 1e3);
    for (int i = 0; i < 500; ++i) {
        const int degree = 1 + static_cast<int>(rng() % 3);
        std::vector<double> den(static_cast<std::size_t>(degree) + 1);
        for (double& c : den) c = coef(rng);
        if (den[0] == 0.0) den[0] = 1.0;
        const double max_coef = std::abs(*std::max_element(den.begin(), den.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        }));
        for (const auto& z : polynomial_roots(den)) {
            REQUIRE(std::abs(polyval(den, z)) < 1e-6 * max_coef * std::max(1.0, std::pow(std::abs(z), degree)));
        }
    }
    // Closed-loop PI cubics from the reference design.
    for (double kp : {0.0, 0.23, 10.0}) {
        const auto cl = close_unity_loop(pi_loop(kp, 1.0));
        const double max_coef = *std::max_element(cl.den().begin(), cl.den().end());
        for (const auto& z : poles(cl)) {
            REQUIRE(std::abs(polyval(cl.den(), z)) < 1e-6 * max_coef);
        }
    }
}
