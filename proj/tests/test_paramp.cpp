#include <doctest.h>

#include <cmath>
#include <random>

#include "noisecal/paramp.hpp"
#include "noisecal/synth.hpp"

using namespace noisecal;

namespace {
const Frequency f6 = Frequency::gigahertz(6.0);
}

TEST_CASE("pi_output_ideal") {
    CHECK(pi_output_ideal(1.0, 0.7, 5.0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(pi_output_ideal(100.0, 0.5, 0.5) == doctest::Approx(99.5).epsilon(1e-15));
    // Cold idler is the quantum limit: input-referred added noise 1/2 (1 - 1/G).
    const double g = 1e4;
    const double out = pi_output_ideal(g, 0.5, 0.5);
    const double added = out / g - 0.5;
    CHECK(added == doctest::Approx(0.5).epsilon(1e-3));
    CHECK_THROWS_AS((void)pi_output_ideal(0.5, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("pi_output_nonideal reduces to the ideal case") {
    PhaseInsensitiveParamp p = PhaseInsensitiveParamp::ideal(250.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> noise(0.5, 25.0);
    for (int i = 0; i < 100; ++i) {
        const double a = noise(rng);
        const double b = noise(rng);
        CHECK(pi_output_nonideal(p, a, b, f6) ==
              doctest::Approx(pi_output_ideal(250.0, a, b)).epsilon(1e-14));
    }
}

TEST_CASE("effective excess noise closed form") {
    // Equal efficiencies 0.8, cold loss (N_T = 1/2), no intrinsic excess,
    // G~i/G~ = 1: N~1,ex = 2 (1 - 0.8) 0.5 / 0.8 = 0.25.
    PhaseInsensitiveParamp p;
    p.gain_ss = 100.0;
    p.gain_is = 100.0 * 0.8 / 0.8;  // makes the effective gain ratio exactly 1
    p.eta_s = 0.8;
    p.eta_i = 0.8;
    p.loss_temperature_k = 0.0;
    CHECK(effective_excess_noise(p, f6) == doctest::Approx(0.25).epsilon(1e-12));

    // The closed form is the general expression evaluated path by path.
    p.excess_ss = 0.3;
    p.excess_is = 0.1;
    const double expected = ((1.0 - 0.8) * 0.5 + 0.3) / 0.8 + ((1.0 - 0.8) * 0.5 + 0.1) / 0.8;
    CHECK(effective_excess_noise(p, f6) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pi_output_nonideal matches the effective-excess reduction") {
    PhaseInsensitiveParamp p;
    p.gain_ss = 180.0;
    p.gain_is = 150.0;
    p.excess_ss = 0.2;
    p.excess_is = 0.35;
    p.eta_s = 0.85;
    p.eta_i = 0.75;
    p.loss_temperature_k = 0.1;
    const double g_eff = p.effective_gain_ss();
    const double ratio = p.effective_gain_is() / p.effective_gain_ss();
    const double n_ex = effective_excess_noise(p, f6);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> noise(0.5, 10.0);
    for (int i = 0; i < 50; ++i) {
        const double ns = noise(rng);
        const double ni = noise(rng);
        const double direct = pi_output_nonideal(p, ns, ni, f6);
        const double reduced = g_eff * (ns + ratio * ni + n_ex);
        CHECK(direct == doctest::Approx(reduced).epsilon(1e-13));
    }
}

TEST_CASE("filtered idler still carries the quantum limit") {
    // eta_i = 0: the idler port sees only the loss-stage Johnson noise; for an
    // ideal amplifier at T = 0 and high gain, the input-referred added noise
    // approaches the half quantum.
    PhaseInsensitiveParamp p = PhaseInsensitiveParamp::ideal(1e4);
    p.eta_i = 0.0;
    const double out = pi_output_nonideal(p, 0.5, 123.0, f6);  // idler input must be ignored
    const double added = out / p.effective_gain_ss() - 0.5;
    CHECK(added == doctest::Approx(0.5).epsilon(1e-3));
    CHECK_THROWS_AS((void)effective_excess_noise(p, f6), std::invalid_argument);
}

TEST_CASE("asymmetry_intercept_bounds") {
    const ExcessBounds unit = asymmetry_intercept_bounds(3.0, 1.0, 1.0);
    CHECK(unit.lo == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(unit.hi == doctest::Approx(3.0).epsilon(1e-15));

    const ExcessBounds wide = asymmetry_intercept_bounds(3.0, 0.5, 2.0);
    CHECK(wide.lo == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(wide.hi == doctest::Approx(4.0).epsilon(1e-15));

    // Fractional uncertainty of the 3 dB asymmetry band is at most 1/3.
    CHECK((3.0 - wide.lo) / 3.0 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK((wide.hi - 3.0) / 3.0 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS((void)asymmetry_intercept_bounds(3.0, 2.0, 0.5), std::invalid_argument);
}

TEST_CASE("compression curve interpolation") {
    auto curve = CompressionCurve::from_lambda({-4e-4, -2e-4, 0.0, 2e-4, 4e-4},
                                               {0.5, 0.9, 1.0, 0.9, 0.5});
    CHECK(curve.lambda(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(curve.lambda(2e-4) == doctest::Approx(0.9).epsilon(1e-12));
    // Monotone interpolation stays within the bracketing samples.
    for (int i = 0; i <= 100; ++i) {
        const double v = 2e-4 + 2e-4 * i / 100.0;
        const double lam = curve.lambda(v);
        CHECK(lam <= 0.9 + 1e-12);
        CHECK(lam >= 0.5 - 1e-12);
    }
    CHECK_THROWS_AS((void)curve.lambda(5e-4), std::out_of_range);
    CHECK(curve.covers(4e-4));
    CHECK(!curve.covers(4.1e-4));
}

TEST_CASE("compression curve from gain trace") {
    // 20 dB small-signal gain compressing to 17 dB.
    auto curve = CompressionCurve::from_gain_db({-3e-4, -1.5e-4, 0.0, 1.5e-4, 3e-4},
                                                {17.0, 19.0, 20.0, 19.0, 17.0});
    CHECK(curve.small_signal_gain() == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(curve.lambda(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(curve.lambda(3e-4) == doctest::Approx(std::pow(10.0, -0.3)).epsilon(1e-12));
}

TEST_CASE("synthetic logistic compression hits the 1 dB point") {
    const double v_1db = 1.042e-4;
    const CompressionCurve curve = make_logistic_compression(v_1db);
    CHECK(curve.lambda(0.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(curve.lambda(v_1db) == doctest::Approx(std::pow(10.0, -0.1)).epsilon(1e-6));
    CHECK(curve.one_db_compression_bias() == doctest::Approx(v_1db).epsilon(1e-3));
}

TEST_CASE("saturated_chain_output") {
    const double v_sat = 2e-4;
    const CompressionCurve curve = make_logistic_compression(v_sat);
    SntjSource junction;
    junction.electron_temperature_k = 0.05;
    const double g_sys = 1e9;
    const double n_ex = 0.35;
    const double n2_tilde = 33.0;
    const double g1 = std::pow(10.0, 2.38);

    CompressionCurve scaled = curve;
    scaled.set_small_signal_gain(g1);

    SUBCASE("lambda = 1 reduces to the unsaturated two-input model") {
        const double v = 1e-6;  // negligible compression near zero bias
        const double lam = scaled.lambda(v);
        CHECK(lam == doctest::Approx(1.0).epsilon(1e-6));
        const double out =
            saturated_chain_output(scaled, v, junction, f6, f6, n_ex, n2_tilde, g_sys);
        const double n_in = sntj_noise(v, 0.05, f6);
        const double expected = g_sys * (2.0 * n_in + n_ex + n2_tilde / g1);
        CHECK(out == doctest::Approx(expected).epsilon(1e-5));
    }
    SUBCASE("the fixed second-stage term is 0.14 quanta for the worked case") {
        CHECK(n2_tilde / g1 == doctest::Approx(0.13756689654521068).epsilon(1e-12));
    }
    SUBCASE("dividing out lambda recovers the corrected model") {
        const double v = 1.8e-4;
        const double lam = scaled.lambda(v);
        CHECK(lam < 0.9);
        const double out =
            saturated_chain_output(scaled, v, junction, f6, f6, n_ex, n2_tilde, g_sys);
        const double n_in = sntj_noise(v, 0.05, f6);
        const double corrected = out / lam;
        const double expected = g_sys * (2.0 * n_in + n_ex + n2_tilde / (g1 * lam));
        CHECK(corrected == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("ps_gain") {
    CHECK(ps_gain(100.0, 0.0) == doctest::Approx(400.0).epsilon(1e-15));
    CHECK(10.0 * std::log10(ps_gain(100.0, 0.0) / 100.0) ==
          doctest::Approx(6.0205999132796240).epsilon(1e-12));
    const double pi_2 = std::acos(0.0);
    CHECK(ps_gain(100.0, pi_2) == doctest::Approx(2.5e-3).epsilon(1e-12));
    CHECK(ps_gain(100.0, 0.0) * ps_gain(100.0, pi_2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ps_gain symmetry and extrema") {
    const double pi = 2.0 * std::acos(0.0);
    for (double g : {1.0, 7.0, 316.0}) {
        for (int i = 0; i <= 40; ++i) {
            const double a = -pi + 2.0 * pi * i / 40.0;
            CHECK(ps_gain(g, a) == doctest::Approx(ps_gain(g, a + pi)).epsilon(1e-12));
            CHECK(ps_gain(g, a) == doctest::Approx(ps_gain(g, -a)).epsilon(1e-12));
            CHECK(ps_gain(g, a) <= 4.0 * g + 1e-12);
            CHECK(ps_gain(g, a) >= 1.0 / (4.0 * g) - 1e-15);
        }
        CHECK(ps_gain(g, 0.0) == doctest::Approx(4.0 * g).epsilon(1e-15));
        CHECK(ps_gain(g, pi / 2.0) == doctest::Approx(1.0 / (4.0 * g)).epsilon(1e-12));
    }
}

TEST_CASE("ps_quadrature_variances") {
    SUBCASE("unit gain, no loss") {
        PhaseSensitiveParamp p;
        const QuadratureVariances v = ps_quadrature_variances(p, 0.5);
        CHECK(v.amplified == doctest::Approx(4.0 * 0.5).epsilon(1e-15));
        CHECK(v.squeezed == doctest::Approx(0.5 / 4.0).epsilon(1e-15));
    }
    SUBCASE("worked example") {
        PhaseSensitiveParamp p;
        p.gain = 100.0;
        p.eta_s = 0.9;
        p.eta_i = 0.9;
        const QuadratureVariances v = ps_quadrature_variances(p, 0.5);
        CHECK(v.amplified == doctest::Approx(180.0).epsilon(1e-12));
        CHECK(v.squeezed == doctest::Approx(1.125e-3).epsilon(1e-12));
    }
    SUBCASE("variance product is independent of gain") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> gain(1.0, 1e4);
        PhaseSensitiveParamp p;
        p.eta_s = 0.8;
        p.eta_i = 0.6;
        const double n_in = 0.75;
        for (int i = 0; i < 100; ++i) {
            p.gain = gain(rng);
            const QuadratureVariances v = ps_quadrature_variances(p, n_in);
            CHECK(v.amplified * v.squeezed ==
                  doctest::Approx(p.eta_s * p.eta_i * n_in * n_in).epsilon(1e-12));
        }
    }
    SUBCASE("input below vacuum is rejected") {
        PhaseSensitiveParamp p;
        CHECK_THROWS_AS((void)ps_quadrature_variances(p, 0.4), std::invalid_argument);
    }
}

TEST_CASE("ps_chain_output") {
    const double pi_2 = std::acos(0.0);
    SUBCASE("ideal chain along the amplified quadrature") {
        PhaseSensitiveParamp p;
        p.gain = 100.0;
        const double g2 = 1e4;
        CHECK(ps_chain_output(p, 0.0, 0.5, g2, 0.0) ==
              doctest::Approx(2.0 * g2 * 100.0).epsilon(1e-13));
    }
    SUBCASE("added noise at the quadrature extremes") {
        PhaseSensitiveParamp p;
        p.gain = 100.0;
        p.eta_s = 0.8;
        p.eta_i = 0.8;
        p.excess = 0.2;
        const double g2 = 1e4;
        const double n2 = 20.0;
        const double root = 0.8;

        // alpha = 0, large gain: input-referred noise approaches N~1,ex.
        const double out0 = ps_chain_output(p, 0.0, 0.5, g2, n2);
        const double gain0 = g2 * root * ps_gain(p.gain, 0.0);
        const double n_sys0 = out0 / gain0 - 0.5;
        CHECK(n_sys0 == doctest::Approx(p.excess / root + n2 / (root * 400.0)).epsilon(1e-12));

        // alpha = pi/2: the second stage dominates; with eta_s = eta_i the
        // added noise is N~2 4G/eta.
        const double out1 = ps_chain_output(p, pi_2, 0.5, g2, n2);
        const double gain1 = g2 * root * ps_gain(p.gain, pi_2);
        const double n_sys1 = out1 / gain1 - 0.5 - p.excess / root;
        CHECK(n_sys1 == doctest::Approx(n2 * 4.0 * p.gain / 0.8).epsilon(1e-9));
    }
}
