#include <doctest.h>

#include <cmath>

#include "noisecal/sources.hpp"

using namespace noisecal;

namespace {
const Frequency f6 = Frequency::gigahertz(6.0);
}

// Expected values below are frozen from arbitrary-precision evaluation of the
// Johnson and shot-noise formulas (mpmath, 50 digits).

TEST_CASE("johnson_noise") {
    CHECK(johnson_noise(0.0, f6) == 0.5);
    CHECK(johnson_noise(0.3, f6) == doctest::Approx(1.1206164576377908).epsilon(1e-12));
    CHECK(johnson_noise(4.0, f6) == doctest::Approx(13.897077951302555).epsilon(1e-12));
    CHECK_THROWS_AS((void)johnson_noise(-1.0, f6), std::invalid_argument);
    CHECK_THROWS_AS((void)johnson_noise(std::nan(""), f6), std::invalid_argument);
}

TEST_CASE("johnson_noise classical limit") {
    // h f / (k_B T) < 1e-3 agrees with k_B T / (h f) to 1e-6 relative.
    for (double fh : {0.5e9, 1e9, 4e9}) {
        const Frequency f(fh);
        const double t = 2000.0 * phys::planck * fh / phys::boltzmann;
        const double classical = phys::boltzmann * t / (phys::planck * fh);
        CHECK(johnson_noise(t, f) == doctest::Approx(classical).epsilon(1e-6));
    }
}

TEST_CASE("johnson_noise above vacuum and monotone") {
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double t = 1e-3 * std::pow(10.0, 5.0 * i / 200.0);
        const double n = johnson_noise(t, f6);
        CHECK(n - 0.5 >= 0.0);
        CHECK(n >= prev);
        prev = n;
    }
    CHECK(johnson_noise(1e-6, f6) - 0.5 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sntj_noise values") {
    CHECK(sntj_noise(0.0, 0.05, f6) == doctest::Approx(0.5031639541235688).epsilon(1e-12));
    CHECK(sntj_noise(1e-3, 0.0, f6) == doctest::Approx(20.14991035070765).epsilon(1e-12));
    // e|V| = h f at T_e = 0 is the junction of the piecewise form.
    const double v_edge = phys::planck * 6e9 / phys::electron_charge;
    CHECK(sntj_noise(v_edge, 0.0, f6) == 0.5);
    CHECK(sntj_noise(0.5 * v_edge, 0.0, f6) == 0.5);
}

TEST_CASE("sntj_noise equals johnson at zero bias") {
    for (int i = 0; i <= 100; ++i) {
        const double t = 1e-3 * std::pow(10.0, 4.0 * i / 100.0);
        for (int j = 0; j <= 100; ++j) {
            const Frequency f(1e9 * (1.0 + 9.0 * j / 100.0));
            const double a = sntj_noise(0.0, t, f);
            const double b = johnson_noise(t, f);
            CHECK(std::abs(a - b) <= 1e-12 * b);
        }
    }
}

TEST_CASE("sntj_noise is exactly even in bias") {
    for (double v : {1e-6, 2.48e-5, 1e-4, 1e-3, 0.3}) {
        CHECK(sntj_noise(v, 0.05, f6) == sntj_noise(-v, 0.05, f6));
        CHECK(sntj_noise(v, 0.0, f6) == sntj_noise(-v, 0.0, f6));
    }
}

TEST_CASE("sntj_noise monotone in |V| and T_e") {
    double prev = 0.0;
    for (int i = 0; i <= 300; ++i) {
        const double v = 1e-3 * i / 300.0;
        const double n = sntj_noise(v, 0.05, f6);
        CHECK(n >= prev);
        prev = n;
    }
    prev = 0.0;
    for (int i = 0; i <= 300; ++i) {
        const double t = 0.5 * i / 300.0;
        const double n = sntj_noise(5e-5, t, f6);
        CHECK(n >= prev);
        prev = n;
    }
}

TEST_CASE("sntj_noise classical asymptote") {
    // e|V| > 100 max(h f, k_B T_e): agrees with e|V|/(2 h f) to 1e-3.
    for (double t : {0.0, 0.05, 0.3}) {
        const double scale =
            std::max(phys::planck * 6e9, phys::boltzmann * t) / phys::electron_charge;
        const double v = 150.0 * scale;
        const double classical = phys::electron_charge * v / (2.0 * phys::planck * 6e9);
        const double n = sntj_noise(v, t, f6);
        CHECK(std::abs(n - classical) / n < 1e-3);
    }
    // Asymptotic slope d(quanta)/d|V| -> e/(2 h f).
    const double v1 = 5e-3;
    const double v2 = 6e-3;
    const double slope =
        (sntj_noise(v2, 0.05, f6) - sntj_noise(v1, 0.05, f6)) / (v2 - v1);
    CHECK(slope ==
          doctest::Approx(phys::electron_charge / (2.0 * phys::planck * 6e9)).epsilon(1e-6));
}

TEST_CASE("sntj_limit closed forms") {
    CHECK(sntj_limit(0.0, 0.05, f6, SntjLimit::zero_bias) ==
          doctest::Approx(johnson_noise(0.05, f6)).epsilon(1e-14));
    CHECK(sntj_limit(1e-3, 0.0, f6, SntjLimit::zero_temperature) ==
          doctest::Approx(20.14991035070765).epsilon(1e-12));
    const double v_edge = phys::planck * 6e9 / phys::electron_charge;
    CHECK(sntj_limit(0.5 * v_edge, 0.0, f6, SntjLimit::zero_temperature) == 0.5);
}

TEST_CASE("sntj_limit agrees with the full formula in its validity domain") {
    // Neglected scale at 1e-4 of the retained scales -> 1e-6 agreement.
    const double hf = phys::planck * 6e9;

    // zero bias: e|V| = 1e-4 min(h f, k_B T_e)
    for (double t : {0.05, 0.5, 4.0}) {
        const double v = 1e-4 * std::min(hf, phys::boltzmann * t) / phys::electron_charge;
        const double full = sntj_noise(v, t, f6);
        const double lim = sntj_limit(v, t, f6, SntjLimit::zero_bias);
        CHECK(std::abs(full - lim) / full < 1e-6);
    }
    // zero frequency: pick f with h f = 1e-4 min(e V, k_B T_e)
    for (double t : {0.05, 0.5}) {
        const double v = 1e-3;
        const double f_lo =
            1e-4 * std::min(phys::electron_charge * v, phys::boltzmann * t) / phys::planck;
        const Frequency f(f_lo);
        const double full = sntj_noise(v, t, f);
        const double lim = sntj_limit(v, t, f, SntjLimit::zero_frequency);
        CHECK(std::abs(full - lim) / full < 1e-6);
    }
    // zero temperature: k_B T_e = 1e-4 min(e V, h f)
    {
        const double v = 1e-3;
        const double t = 1e-4 * std::min(phys::electron_charge * v, hf) / phys::boltzmann;
        const double full = sntj_noise(v, t, f6);
        const double lim = sntj_limit(v, t, f6, SntjLimit::zero_temperature);
        CHECK(std::abs(full - lim) / full < 1e-6);
    }
}

TEST_CASE("sntj_limit rejects out-of-domain cases") {
    // Neglected scale above 10% of the smallest retained scale.
    CHECK_THROWS_AS((void)sntj_limit(1e-3, 0.05, f6, SntjLimit::zero_bias),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)sntj_limit(1e-3, 0.05, f6, SntjLimit::zero_frequency),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)sntj_limit(1e-3, 4.0, f6, SntjLimit::zero_temperature),
                    std::invalid_argument);
    // T_e = 0 exactly is always a valid zero-temperature case.
    CHECK_NOTHROW((void)sntj_limit(1e-3, 0.0, f6, SntjLimit::zero_temperature));
}

TEST_CASE("classical spectral densities") {
    CHECK(johnson_psd_w_per_hz(1.0) == doctest::Approx(1.380649e-23).epsilon(1e-14));
    CHECK(shot_psd_w_per_hz(1e-3) == doctest::Approx(8.01088317e-23).epsilon(1e-9));
    CHECK(johnson_psd_v2_per_hz(1.0, 50.0) == doctest::Approx(2.761298e-21).epsilon(1e-12));
    CHECK(shot_psd_a2_per_hz(2e-5) ==
          doctest::Approx(2.0 * phys::electron_charge * 2e-5).epsilon(1e-14));
    CHECK(shot_psd_w_per_hz(-1e-3) == shot_psd_w_per_hz(1e-3));
}

TEST_CASE("bias network") {
    BiasNetwork nominal;
    CHECK(nominal.division_ratio() == doctest::Approx(2001.0).epsilon(1e-12));

    BiasNetwork measured;
    measured.junction_impedance_ohm = 49.3;
    CHECK(measured.division_ratio() == doctest::Approx(2029.3975659229209).epsilon(1e-12));
    CHECK(measured.junction_voltage(1.0) ==
          doctest::Approx(1.0 / 2029.3975659229209).epsilon(1e-12));

    BiasNetwork direct;
    direct.series_resistance_ohm = 0.0;
    CHECK(direct.junction_voltage(0.123) == doctest::Approx(0.123).epsilon(1e-15));

    CHECK(nominal.tap_reading(1e-3) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("voltage temperature equivalence") {
    CHECK(voltage_temperature_equivalent(1e-3, VoltsToKelvin::ev_over_kb) ==
          doctest::Approx(11.604518121550083).epsilon(1e-12));
    CHECK(voltage_temperature_equivalent(1e-3, VoltsToKelvin::ev_over_2kb) ==
          doctest::Approx(5.802259060775041).epsilon(1e-12));
    CHECK(voltage_temperature_equivalent(0.0, VoltsToKelvin::ev_over_kb) == 0.0);
}

TEST_CASE("source structs evaluate their formulas") {
    JohnsonSource vts{0.3, 50.0};
    CHECK(vts.quanta_at(f6) == johnson_noise(0.3, f6));
    SntjSource junction{1e-4, 0.05, 49.3};
    CHECK(junction.quanta_at(f6) == sntj_noise(1e-4, 0.05, f6));
}
