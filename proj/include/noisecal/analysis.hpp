#pragma once

// =============================================================================
// noisecal - measurement pipelines
// =============================================================================
// Per-frequency Y-factor spectra, transmission-efficiency extraction with
// reference-plane correction, the noise-rise estimator, the single- vs
// two-input misinterpretation report, and the phase-sensitive predictive
// model.
// =============================================================================

#include <span>
#include <string>
#include <vector>

#include "noisecal/chain.hpp"
#include "noisecal/fitting.hpp"

namespace noisecal {

/// Per-frequency fit results of one amplification chain. Bins whose fit
/// failed carry an error marker instead of aborting the pipeline.
struct SpectralResult {
    FitModelKind kind = FitModelKind::single_input;
    std::vector<double> frequencies_hz;
    std::vector<double> g_sys;
    std::vector<double> g_sys_err;
    std::vector<Quanta> noise;        // fitted noise parameter per bin
    std::vector<Quanta> noise_err;
    std::vector<Quanta> n_sys;        // derived system-added noise per bin
    std::vector<bool> ok;
    std::vector<std::string> errors;  // empty string for good bins

    [[nodiscard]] std::size_t size() const { return frequencies_hz.size(); }
};

/// Two-step fit of every curve; for two-input models the reported N_sys is
/// 1/2 + N_sys_ex. Requires at least 4 setpoints per bin.
[[nodiscard]] SpectralResult yfactor_spectrum(std::span<const NoiseCurve> curves,
                                              const FitModel& model);

/// Per-bin transmission efficiency from two spectra of the same chain whose
/// reference planes bracket a lossy section. Frequency grids must match.
[[nodiscard]] std::vector<TransmissionEfficiency> efficiency_spectrum(
    const SpectralResult& near_plane, const SpectralResult& far_plane);

/// Reference-plane-corrected system-added noise spectrum: applies the
/// excess-noise correction per bin and adds the half quantum back.
struct CorrectedBin {
    double frequency_hz = 0.0;
    Quanta n_sys_corrected = 0.0;
    bool unphysical = false;
    bool ok = true;
};

[[nodiscard]] std::vector<CorrectedBin> corrected_spectrum(
    const SpectralResult& result, std::span<const TransmissionEfficiency> efficiencies,
    Quanta n_t1);

// -----------------------------------------------------------------------------
// Noise rise
// -----------------------------------------------------------------------------

/// Output-noise ratio between first-amplifier on and off:
/// r = g1 (n_in + n1) / (n_in + n2_tilde).
[[nodiscard]] double noise_rise(double g1, Quanta n_in, Quanta n1, Quanta n2_tilde);

/// Inverse of noise_rise for the first-amplifier added noise:
/// n1 = (r/g1)(n_in + n2_tilde) - n_in. A negative result is flagged, not
/// clamped; the estimator is biased optimistic.
struct NoiseRiseEstimate {
    Quanta n1 = 0.0;
    bool unphysical = false;
};

[[nodiscard]] NoiseRiseEstimate n1_from_noise_rise(double g1, Quanta n_in, Quanta n2_tilde,
                                                   double r);

// -----------------------------------------------------------------------------
// Phase-sensitive predictive model
// -----------------------------------------------------------------------------

/// Predicted phase-sensitive chain response built from the HEMT-only chain
/// calibration: G~(alpha) = M cos^2(alpha) + sin^2(alpha)/M,
/// G_sys(alpha) = G_sys_hemt * G~(alpha),
/// N_sys(alpha) = m + N_sys_hemt/G~(alpha) - N_sys_hemt/M.
struct PsPrediction {
    std::vector<double> alpha;
    std::vector<double> g_sys;
    std::vector<Quanta> n_sys;
};

[[nodiscard]] PsPrediction ps_predictive_model(double m_gain, double g_sys_hemt,
                                               Quanta n_sys_hemt, Quanta m_noise,
                                               std::span<const double> alpha_grid);

// -----------------------------------------------------------------------------
// Model misinterpretation
// -----------------------------------------------------------------------------

/// Side-by-side asymptotic fits of one curve under the single-input and
/// two-input models. When the curve comes from a parametric chain with
/// N_in = N_in_i, the single-input slope is twice the true system gain and
/// its intercept noise is half the system-excess noise.
struct MisinterpretationReport {
    FitResult single_input;
    FitResult two_input;
    double slope_ratio = 0.0;       // single-input gain over two-input gain
    Quanta n_sys_single = 0.0;      // single-input reading of the system-added noise
    Quanta n_sys_two = 0.0;         // two-input reading, 1/2 + excess
};

[[nodiscard]] MisinterpretationReport model_misinterpretation_report(const NoiseCurve& curve);

}  // namespace noisecal
