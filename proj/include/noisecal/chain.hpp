#pragma once

// =============================================================================
// noisecal - amplification chain algebra
// =============================================================================
// Loss and amplifier stages, reduction of a (loss, amplifier) pair to an
// effective amplifier, Friis accumulation of a whole chain, reference-plane
// motion, and transmission-efficiency extraction from paired gain spectra.
// =============================================================================

#include <span>
#include <vector>

#include "noisecal/quanta.hpp"

namespace noisecal {

/// Beamsplitter-style attenuation: transmits a fraction eta of the signal and
/// replaces the rest with Johnson noise at the stage temperature.
struct LossStage {
    double efficiency = 1.0;    // in (0, 1]
    double temperature_k = 0.0; // converted to quanta at the working frequency
};

/// Linear amplifier: N_out = G (N_in + N).
struct AmplifierStage {
    double gain = 1.0;          // >= 1
    double added_noise = 0.0;   // quanta, >= 0
};

/// Canonical chain element: every topology is a list of (loss, amplifier)
/// pairs. A bare loss carries a unit amplifier, a bare amplifier a unit loss.
struct ChainStage {
    LossStage loss{};
    AmplifierStage amplifier{};
};

[[nodiscard]] inline ChainStage make_loss(double efficiency, double temperature_k) {
    return ChainStage{{efficiency, temperature_k}, {1.0, 0.0}};
}

[[nodiscard]] inline ChainStage make_amplifier(double gain, double added_noise) {
    return ChainStage{{1.0, 0.0}, {gain, added_noise}};
}

/// Reduced form of one or more stages: N_out = G (N_in + N).
struct EffectiveAmplifier {
    double gain = 1.0;
    double added_noise = 0.0;
};

/// Fold a loss stage into the following amplifier:
/// G~ = eta G, N~ = ((1 - eta) N_T + N) / eta with N_T the loss stage's
/// Johnson quanta at f. Throws on eta outside (0, 1].
[[nodiscard]] EffectiveAmplifier compose_stage(const LossStage& loss, const AmplifierStage& amp,
                                               Frequency f);

/// Friis accumulation of an ordered chain into one effective amplifier:
/// gain is the product of effective gains, added noise is
/// N~1 + N~2/G~1 + N~3/(G~1 G~2) + ... Throws on an empty chain.
[[nodiscard]] EffectiveAmplifier reduce_chain(std::span<const ChainStage> stages, Frequency f);

/// Output noise of a reduced chain: G_sys (N_in + N_sys).
[[nodiscard]] Quanta chain_output(const EffectiveAmplifier& eff, Quanta n_in);

/// Result of moving the measurement reference plane past the first loss.
/// A negative corrected excess means the correction over-subtracted; the
/// value is returned as-is with the flag set, never clamped.
struct PlaneCorrection {
    double excess = 0.0;       // corrected system-excess noise, quanta
    bool unphysical = false;   // excess < 0
};

/// Corrected system-excess noise for equal signal/idler efficiencies:
/// eta1 N_sys_ex - 2 (1 - eta1) N_T1. Corrected system-added noise is
/// excess + 1/2.
[[nodiscard]] PlaneCorrection move_reference_plane(double n_sys_ex, double eta1, Quanta n_t1);

/// General form with distinct signal and idler efficiencies. Assumes the
/// intrinsic excess splits evenly between the two paths, which reduces to the
/// equal-efficiency expression when eta_signal == eta_idler.
[[nodiscard]] PlaneCorrection move_reference_plane(double n_sys_ex, double eta_signal,
                                                   double eta_idler, Quanta n_t1);

/// Transmission efficiency from two system gains of the same chain measured
/// against reference planes on either side of the lossy section.
struct TransmissionEfficiency {
    double eta = 1.0;
    double insertion_loss_db = 0.0;
    bool inconsistent = false;  // eta > 1: measurement inconsistency, still returned
};

[[nodiscard]] TransmissionEfficiency efficiency_from_gains(double g_near, double g_far);

}  // namespace noisecal
