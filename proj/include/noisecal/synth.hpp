#pragma once

// =============================================================================
// noisecal - synthetic noise-curve generation
// =============================================================================
// Forward-models any chain/source combination into NoiseCurve datasets and
// optionally adds spectrum-analyzer acquisition noise. Seeded generation is
// part of the public contract: identical inputs and seed produce identical
// bytes, with per-bin sub-seeds derived by counter.
// =============================================================================

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "noisecal/fitting.hpp"
#include "noisecal/paramp.hpp"
#include "noisecal/quanta.hpp"

namespace noisecal {

/// Spectrum-analyzer settings that control the variance of a noise estimate.
/// The effective number of averages is
/// trace_averages * max(1, rbw * sweep_time / points_per_sweep)
/// and the relative standard deviation of one point is 1/sqrt(n_eff)
/// (radiometer statistics, multiplicative Gaussian on power).
struct AcquisitionSettings {
    double rbw_hz = 8e6;
    double vbw_hz = 15e3;
    int points_per_sweep = 501;
    double sweep_time_s = 0.05;
    int trace_averages = 1500;
    std::uint64_t rng_seed = 0;

    [[nodiscard]] double effective_averages() const;
    [[nodiscard]] double relative_sigma() const;
    void validate() const;

    /// Wideband spectrum acquisition: 8 MHz RBW, 15 kHz VBW, 501 points,
    /// 1500 averaged traces.
    [[nodiscard]] static AcquisitionSettings wideband();

    /// Small-bias zero-span acquisition: 8 MHz RBW, 501 points over a 1/20 s
    /// sweep, single trace.
    [[nodiscard]] static AcquisitionSettings small_bias();
};

// -----------------------------------------------------------------------------
// Forward models
// -----------------------------------------------------------------------------

/// Reduced single-input chain: N_out = g_sys (N_in + n_sys).
struct SingleInputChainModel {
    double g_sys = 1e9;
    Quanta n_sys = 1.0;
};

/// Two-input parametric chain: N_out = g_sys (N_in + N_in_i + n_sys_ex).
struct TwoInputChainModel {
    double g_sys = 1e9;
    Quanta n_sys_ex = 0.0;
    std::optional<double> idler_frequency_hz;  // defaults to the signal frequency
};

/// Saturating two-input chain driven through a compression curve.
struct SaturatedChainModel {
    CompressionCurve lambda;
    double g_sys = 1e9;
    Quanta n_ex_tilde = 0.0;
    Quanta n2_over_g1 = 0.0;
    std::optional<double> idler_frequency_hz;
};

using ForwardModel =
    std::variant<SingleInputChainModel, TwoInputChainModel, SaturatedChainModel>;

/// Noise source driving the sweep: SNTJ setpoints are bias volts, VTS
/// setpoints are stage temperatures in kelvin.
struct SourceSpec {
    SourceKind kind = SourceKind::sntj;
    double electron_temperature_k = 0.05;
};

/// Noiseless output of a forward model at one setpoint.
[[nodiscard]] Quanta forward_output(const ForwardModel& model, const SourceSpec& source,
                                    double setpoint, Frequency f);

/// Generate one noise curve. Without acquisition settings the outputs are the
/// exact forward-model values; with them, each point carries a multiplicative
/// Gaussian fluctuation of relative sigma 1/sqrt(n_eff), reproducible from
/// the seed.
[[nodiscard]] NoiseCurve generate_curve(const ForwardModel& model, const SourceSpec& source,
                                        std::span<const double> setpoints, Frequency f,
                                        const std::optional<AcquisitionSettings>& acq = {});

/// One curve per frequency bin, deterministic given the seed: bin k uses a
/// sub-seed derived from the base seed and k.
[[nodiscard]] std::vector<NoiseCurve> generate_spectrum(
    const ForwardModel& model, const SourceSpec& source, std::span<const double> setpoints,
    std::span<const double> frequencies_hz, const std::optional<AcquisitionSettings>& acq = {});

// -----------------------------------------------------------------------------
// Sweep helpers
// -----------------------------------------------------------------------------

/// Evenly spaced SNTJ biases spanning eV/(2 k_B) = +-span_kelvin
/// (the default reproduces the 10-point +-0.5 K sweep).
[[nodiscard]] std::vector<double> sntj_bias_sweep(int count = 10, double span_kelvin = 0.5);

/// Evenly spaced values including both endpoints.
[[nodiscard]] std::vector<double> linspace(double lo, double hi, int count);

/// Synthetic gain-compression curve: logistic in (V/v_1db)^2, equal to 1 at
/// zero bias and exactly 1 dB down at |V| = v_1db. sharpness controls how
/// abrupt the knee is; the curve is sampled out to v_max_over_v1db * v_1db.
[[nodiscard]] CompressionCurve make_logistic_compression(double v_1db, double sharpness = 3.0,
                                                         double v_max_over_v1db = 8.0,
                                                         int samples = 401);

// -----------------------------------------------------------------------------
// Deterministic random numbers
// -----------------------------------------------------------------------------

/// Standard-normal stream with a pinned algorithm (Box-Muller over
/// mt19937_64), so seeded outputs are identical across platforms.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}
    [[nodiscard]] double next();

private:
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Sub-seed for a counter-indexed stream (splitmix64 of seed and counter).
[[nodiscard]] std::uint64_t derive_subseed(std::uint64_t seed, std::uint64_t counter);

}  // namespace noisecal
