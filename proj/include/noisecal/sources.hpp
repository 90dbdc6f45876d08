#pragma once

// =============================================================================
// noisecal - calibrated noise sources
// =============================================================================
// Evaluable models of the two self-calibrated noise sources used for Y-factor
// measurements: a heated matched resistor (Johnson noise / VTS) and a shot
// noise tunnel junction (SNTJ), plus their classical-limit spectral densities
// and the SNTJ dc bias network.
// =============================================================================

#include "noisecal/quanta.hpp"

namespace noisecal {

/// Numerically stable coth. Laurent series 1/x + x/3 - x^3/45 for |x| < 1e-4,
/// saturates to sign(x) for |x| > 20.
[[nodiscard]] double coth(double x);

/// x * coth(x), even and finite everywhere (value 1 at x = 0).
[[nodiscard]] double xcoth(double x);

/// Johnson noise dissipated into a matched circuit, in quanta:
/// (1/2) coth(h f / (2 k_B T)). Returns exactly 1/2 at T = 0.
[[nodiscard]] Quanta johnson_noise(double temperature_k, Frequency f);

/// SNTJ shot noise dissipated into a matched circuit, in quanta. Two-coth
/// expression in the bias voltage; even in V, equal to johnson_noise at V = 0.
/// At T_e = 0 exactly, evaluates the closed piecewise form
/// max(1/2, e|V|/(2 h f)) since the coth arguments diverge.
[[nodiscard]] Quanta sntj_noise(double bias_v, double electron_temperature_k, Frequency f);

/// Closed-form limit cases of the SNTJ noise, valid when one energy scale is
/// negligible against the other two.
enum class SntjLimit {
    zero_bias,         // e|V| negligible: reduces to Johnson noise at T_e
    zero_frequency,    // h f negligible: e V coth(e V / (2 k_B T_e)) / (2 h f)
    zero_temperature,  // k_B T_e negligible: max(1/2, e|V| / (2 h f))
};

/// Evaluate the requested limit case. Throws std::invalid_argument when the
/// neglected energy scale exceeds 10% of the smallest retained scale.
[[nodiscard]] Quanta sntj_limit(double bias_v, double electron_temperature_k, Frequency f,
                                SntjLimit which);

// -----------------------------------------------------------------------------
// Source descriptions
// -----------------------------------------------------------------------------

/// Matched resistor at temperature T; resistance only matters for the
/// V^2/Hz spectral density variant.
struct JohnsonSource {
    double temperature_k = 0.0;
    double resistance_ohm = 50.0;

    [[nodiscard]] Quanta quanta_at(Frequency f) const {
        return johnson_noise(temperature_k, f);
    }
};

/// Shot noise tunnel junction at a dc bias. The dc impedance enters only the
/// bias network arithmetic; mismatch to the line is ignored in emitted quanta.
struct SntjSource {
    double bias_v = 0.0;
    double electron_temperature_k = 0.0;
    double dc_impedance_ohm = 50.0;

    [[nodiscard]] Quanta quanta_at(Frequency f) const {
        return sntj_noise(bias_v, electron_temperature_k, f);
    }
};

// -----------------------------------------------------------------------------
// Classical-limit spectral densities
// -----------------------------------------------------------------------------

/// S_P = k_B T, W/Hz dissipated into a matched circuit.
[[nodiscard]] double johnson_psd_w_per_hz(double temperature_k);

/// S_V = 4 k_B T R, open-circuit voltage noise in V^2/Hz.
[[nodiscard]] double johnson_psd_v2_per_hz(double temperature_k, double resistance_ohm);

/// S_P = e|V|/2, W/Hz dissipated into a matched circuit.
[[nodiscard]] double shot_psd_w_per_hz(double bias_v);

/// S_I = 2 e |I|, current noise in A^2/Hz.
[[nodiscard]] double shot_psd_a2_per_hz(double current_a);

// -----------------------------------------------------------------------------
// SNTJ dc bias network
// -----------------------------------------------------------------------------

/// Series biasing resistor plus junction, read out through a voltage tap.
/// The large division ratio damps voltage-source fluctuations.
struct BiasNetwork {
    double series_resistance_ohm = 1e5;
    double junction_impedance_ohm = 50.0;
    double amplifier_gain = 100.0;  // voltage-tap readout gain

    /// R_series / Z + 1; nominally 2001.
    [[nodiscard]] double division_ratio() const;

    /// Junction voltage for a given source (AWG) voltage.
    [[nodiscard]] double junction_voltage(double awg_voltage) const;

    /// Voltmeter reading of the junction voltage through the tap amplifier.
    [[nodiscard]] double tap_reading(double junction_voltage_v) const {
        return junction_voltage_v * amplifier_gain;
    }
};

/// Conventions for quoting an SNTJ bias as an equivalent source temperature.
/// The e|V|/k_B form matches the quoted 1 mV <-> 11.6 K equivalence; the
/// e|V|/(2 k_B) form equates the classical spectral densities
/// (S_P_shot = e|V|/2 against S_P_Johnson = k_B T).
enum class VoltsToKelvin { ev_over_kb, ev_over_2kb };

[[nodiscard]] double voltage_temperature_equivalent(double bias_v, VoltsToKelvin convention);

}  // namespace noisecal
