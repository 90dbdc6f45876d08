#pragma once

// =============================================================================
// noisecal - file formats
// =============================================================================
// CSV and JSON schemas shared by the library and the CLI:
//   - noise curves:   frequency_hz, setpoint, setpoint_unit{V|K},
//                     output, output_unit{quanta|w_per_hz}
//   - chain document: versioned JSON stage list
//   - compression:    two-column CSV (bias_v, lambda | gain_db)
//   - fit results:    JSON with parameters, errors, window, diagnostics
//   - spectra:        CSV per frequency bin
// Numbers are written with shortest round-trip formatting so seeded runs are
// byte-identical.
// =============================================================================

#include <filesystem>
#include <string>
#include <vector>

#include "noisecal/analysis.hpp"
#include "noisecal/chain.hpp"
#include "noisecal/fitting.hpp"
#include "noisecal/paramp.hpp"

namespace noisecal {

/// A file does not conform to its schema (usage-level error, CLI exit 2).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal representation of a double.
[[nodiscard]] std::string format_double(double value);

// -----------------------------------------------------------------------------
// Noise curve CSV
// -----------------------------------------------------------------------------

/// Serialize curves, one row per sample. The source kind maps onto the
/// setpoint unit: V for an SNTJ bias sweep, K for a VTS temperature sweep.
[[nodiscard]] std::string noise_curves_to_csv(std::span<const NoiseCurve> curves);

/// Parse a curve file; rows sharing a frequency form one curve, in file
/// order. The optional physical temperature is applied to every curve.
[[nodiscard]] std::vector<NoiseCurve> noise_curves_from_csv(const std::string& text,
                                                            double physical_temperature_k = 0.05);

void write_noise_curves(const std::filesystem::path& path, std::span<const NoiseCurve> curves);
[[nodiscard]] std::vector<NoiseCurve> read_noise_curves(const std::filesystem::path& path,
                                                        double physical_temperature_k = 0.05);

// -----------------------------------------------------------------------------
// Chain JSON document
// -----------------------------------------------------------------------------

[[nodiscard]] std::string chain_to_json(std::span<const ChainStage> stages);
[[nodiscard]] std::vector<ChainStage> chain_from_json(const std::string& text);
[[nodiscard]] std::vector<ChainStage> read_chain(const std::filesystem::path& path);

// -----------------------------------------------------------------------------
// Compression curve CSV
// -----------------------------------------------------------------------------

/// Two columns with a header row naming the second column either `lambda` or
/// `gain_db`; gain traces are normalized to the small-signal gain.
[[nodiscard]] CompressionCurve compression_from_csv(const std::string& text);
[[nodiscard]] CompressionCurve read_compression(const std::filesystem::path& path);
[[nodiscard]] std::string compression_to_csv(const CompressionCurve& curve);

// -----------------------------------------------------------------------------
// Fit result JSON and residual CSV
// -----------------------------------------------------------------------------

[[nodiscard]] std::string fit_result_to_json(const FitResult& fit);
void write_fit_result(const std::filesystem::path& path, const FitResult& fit);

/// Rows of (setpoint, data, model, fractional residual) for the fitted points.
[[nodiscard]] std::string fit_residuals_to_csv(const FitResult& fit, const NoiseCurve& curve);

// -----------------------------------------------------------------------------
// Spectral exports
// -----------------------------------------------------------------------------

[[nodiscard]] std::string spectral_result_to_csv(const SpectralResult& result);
[[nodiscard]] std::string spectral_result_to_json(const SpectralResult& result);
[[nodiscard]] std::string efficiency_spectrum_to_csv(
    std::span<const double> frequencies_hz, std::span<const TransmissionEfficiency> etas);
[[nodiscard]] std::string corrected_spectrum_to_csv(std::span<const CorrectedBin> bins);

/// Window-sweep rows: width, gain, noise, system-added noise, diagnostics.
[[nodiscard]] std::string window_sweep_to_csv(std::span<const FitResult> results);

// -----------------------------------------------------------------------------
// Plumbing
// -----------------------------------------------------------------------------

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace noisecal
