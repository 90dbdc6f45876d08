#pragma once

// =============================================================================
// noisecal - parametric amplifier models
// =============================================================================
// Phase-insensitive amplification with an explicit idler input mode (ideal
// and non-ideal, including asymmetric signal/idler gains and a filtered
// idler), bias-dependent gain compression, and the phase-sensitive quadrature
// transformation with pre-amplifier loss.
// =============================================================================

#include <utility>
#include <vector>

#include "noisecal/quanta.hpp"
#include "noisecal/sources.hpp"

namespace noisecal {

// -----------------------------------------------------------------------------
// Phase-insensitive case
// -----------------------------------------------------------------------------

/// Non-ideal phase-insensitive parametric amplifier. The signal-to-signal and
/// idler-to-signal paths carry separate gains, excess noises, and input
/// transmission efficiencies. An ideal amplifier has gain_is = gain_ss - 1,
/// zero excess terms, and unit efficiencies.
struct PhaseInsensitiveParamp {
    double gain_ss = 1.0;            // G1, signal -> signal, >= 1
    double gain_is = 0.0;            // G1^i, idler -> signal, >= 0
    Quanta excess_ss = 0.0;          // N1,ex
    Quanta excess_is = 0.0;          // N1,ex^i
    double eta_s = 1.0;              // signal-path input efficiency, in (0, 1]
    double eta_i = 1.0;              // idler-path input efficiency, in [0, 1]
    double loss_temperature_k = 0.0; // temperature of the input loss

    [[nodiscard]] static PhaseInsensitiveParamp ideal(double g1) {
        PhaseInsensitiveParamp p;
        p.gain_ss = g1;
        p.gain_is = g1 - 1.0;
        return p;
    }

    [[nodiscard]] double effective_gain_ss() const { return eta_s * gain_ss; }
    [[nodiscard]] double effective_gain_is() const { return eta_i * gain_is; }
};

/// Ideal two-input output: G1 N_in + (G1 - 1) N_in_i.
[[nodiscard]] Quanta pi_output_ideal(double g1, Quanta n_in, Quanta n_in_i);

/// Non-ideal two-input output with pre-amplifier loss on both paths:
/// G1 [eta_s N_in + (1 - eta_s) N_T + N1,ex]
/// + G1^i [eta_i N_in_i + (1 - eta_i) N_T + N1,ex^i].
/// Valid for eta_i = 0 (filtered idler), where the idler port sees only the
/// loss-stage Johnson noise.
[[nodiscard]] Quanta pi_output_nonideal(const PhaseInsensitiveParamp& p, Quanta n_in,
                                        Quanta n_in_i, Frequency f);

/// Effective signal-referred excess noise N~1,ex of the non-ideal amplifier:
/// ((1 - eta_s) N_T + N1,ex) / eta_s
/// + (G~1^i/G~1) ((1 - eta_i) N_T + N1,ex^i) / eta_i.
/// Requires eta_i > 0; the filtered-idler case has no such reduction.
[[nodiscard]] Quanta effective_excess_noise(const PhaseInsensitiveParamp& p, Frequency f);

/// Range of the true effective excess noise when a fit assumed
/// G~1^i/G~1 = 1 but the ratio actually lies in [ratio_lo, ratio_hi]:
/// the recovered excess is 2 n_ex_tilde / (1 + ratio). For [1/2, 2] the
/// span is [2/3, 4/3] of the assumed value.
struct ExcessBounds {
    Quanta lo = 0.0;
    Quanta hi = 0.0;
};

[[nodiscard]] ExcessBounds asymmetry_intercept_bounds(Quanta n_ex_tilde, double ratio_lo,
                                                      double ratio_hi);

// -----------------------------------------------------------------------------
// Gain compression
// -----------------------------------------------------------------------------

/// Bias-dependent gain compression factor lambda(V) = G~1(V)/G1, sampled and
/// interpolated with a monotone cubic. Queries outside the sampled bias range
/// throw; the curve is measured, not modeled, so no extrapolation.
class CompressionCurve {
public:
    /// Build from lambda samples directly. lambda must be in (0, 1] and equal
    /// to 1 at the smallest |bias| sample within tolerance.
    [[nodiscard]] static CompressionCurve from_lambda(std::vector<double> bias_v,
                                                      std::vector<double> lambda);

    /// Build from a measured gain trace in dB; normalized to the small-signal
    /// gain, taken at the sample closest to zero bias.
    [[nodiscard]] static CompressionCurve from_gain_db(std::vector<double> bias_v,
                                                       std::vector<double> gain_db);

    [[nodiscard]] double lambda(double bias_v) const;
    [[nodiscard]] bool covers(double bias_v) const;
    [[nodiscard]] double min_bias() const { return bias_.front(); }
    [[nodiscard]] double max_bias() const { return bias_.back(); }

    /// Small-signal linear gain (1.0 when built from lambda samples).
    [[nodiscard]] double small_signal_gain() const { return small_signal_gain_; }
    void set_small_signal_gain(double g) { small_signal_gain_ = g; }

    /// Smallest positive bias where the gain has dropped by 1 dB
    /// (lambda = 10^-0.1), found by interpolation. Throws if the curve never
    /// compresses that far.
    [[nodiscard]] double one_db_compression_bias() const;

    [[nodiscard]] const std::vector<double>& biases() const { return bias_; }
    [[nodiscard]] const std::vector<double>& lambdas() const { return lambda_; }

private:
    CompressionCurve() = default;
    void build_tangents();

    std::vector<double> bias_;
    std::vector<double> lambda_;
    std::vector<double> tangent_;  // Fritsch-Carlson monotone tangents
    double small_signal_gain_ = 1.0;
};

/// Output of a saturating two-input chain at one SNTJ bias:
/// N_out = G_sys lambda(V) (N_in + N_in_i + N~1,ex + N~2 / (G~1 lambda(V))),
/// with N_in and N_in_i evaluated from the SNTJ at the signal and idler
/// frequencies and G~1 the small-signal first-stage gain from the curve.
[[nodiscard]] Quanta saturated_chain_output(const CompressionCurve& curve, double bias_v,
                                            const SntjSource& source, Frequency f_signal,
                                            Frequency f_idler, Quanta n_ex_tilde,
                                            Quanta n2_tilde, double g_sys);

// -----------------------------------------------------------------------------
// Phase-sensitive case
// -----------------------------------------------------------------------------

/// Phase-sensitive parametric amplifier with pre-amplifier loss on the two
/// frequency bands that form the quadratures.
struct PhaseSensitiveParamp {
    double gain = 1.0;        // G1, >= 1 (phase-insensitive gain)
    double pump_phase = 0.0;  // theta, radians
    double eta_s = 1.0;
    double eta_i = 1.0;
    Quanta excess = 0.0;      // N1,ex
};

/// Effective phase-sensitive gain 4 G1 cos^2(alpha) + sin^2(alpha)/(4 G1).
/// Along the amplified quadrature (alpha = 0) this is 4 G1, i.e. 6 dB above
/// the phase-insensitive gain; along alpha = pi/2 the input is squeezed.
[[nodiscard]] double ps_gain(double g1, double alpha);

struct QuadratureVariances {
    Quanta amplified = 0.0;
    Quanta squeezed = 0.0;
};

/// High-gain quadrature variances with loss:
/// amplified = 4 G1 sqrt(eta_s eta_i) n_in,
/// squeezed  = sqrt(eta_s eta_i) / (4 G1) n_in.
[[nodiscard]] QuadratureVariances ps_quadrature_variances(const PhaseSensitiveParamp& p,
                                                          Quanta n_in);

/// Output of a phase-sensitive amplifier followed by a phase-insensitive
/// stage, measured along a quadrature at angle alpha:
/// G~2 G~1(alpha) (N_in + N~1,ex + N~2/G~1(alpha)),
/// with G~1(alpha) = sqrt(eta_s eta_i) ps_gain and N~1,ex the loss-referred
/// excess.
[[nodiscard]] Quanta ps_chain_output(const PhaseSensitiveParamp& p, double alpha, Quanta n_in,
                                     double g2_tilde, Quanta n2_tilde);

}  // namespace noisecal
