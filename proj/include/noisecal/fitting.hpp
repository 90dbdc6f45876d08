#pragma once

// =============================================================================
// noisecal - noise-curve fitting
// =============================================================================
// The two-step fit of calibrated noise curves: a linear asymptotic fit of the
// classical branches seeds a bounded nonlinear fit of the full quantum source
// model. Variants cover single-input chains (HEMT-style), two-input
// parametric-amplifier chains, the saturation-corrected fit, electron
// temperature thermometry, and window sweeps. The damped least-squares engine
// underneath is generic.
// =============================================================================

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisecal/paramp.hpp"
#include "noisecal/quanta.hpp"
#include "noisecal/sources.hpp"

namespace noisecal {

/// Fitting failed in a way that is numeric, not a schema or usage problem:
/// too few usable points, non-convergence, singular normal equations.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// -----------------------------------------------------------------------------
// Generic damped least squares
// -----------------------------------------------------------------------------

struct ParameterBound {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

struct LeastSquaresOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;      // relative step size
    double cost_tolerance = 1e-12;      // relative cost change
    std::vector<double> scales;         // per-parameter magnitudes for FD steps
};

struct LeastSquaresFit {
    std::vector<double> parameters;
    std::vector<double> standard_errors;
    std::vector<std::vector<double>> covariance;
    std::vector<double> residuals;
    double cost = 0.0;                  // sum of squared residuals
    int iterations = 0;
    bool converged = false;
    std::vector<bool> at_bound;
    double condition_estimate = 0.0;    // of the final normal equations
};

/// Residual function: maps a parameter vector to the residual vector.
using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;

/// Damped Gauss-Newton (Levenberg-Marquardt) minimization of sum r_i^2 with a
/// finite-difference Jacobian. Bounds are enforced through a smooth parameter
/// transform. Iteration cap per options; throws FitError on singular normal
/// equations (message carries a condition estimate). Non-convergence at the
/// cap is reported through the converged flag, with the last iterate kept.
[[nodiscard]] LeastSquaresFit least_squares(const ResidualFn& fn, std::vector<double> initial,
                                            std::vector<ParameterBound> bounds,
                                            const LeastSquaresOptions& options = {});

// -----------------------------------------------------------------------------
// Noise curves and fit models
// -----------------------------------------------------------------------------

enum class SourceKind { sntj, vts };
enum class OutputUnit { quanta, watts_per_hz };

/// One measured or synthetic output-noise curve at a fixed frequency. SNTJ
/// curves sweep the bias voltage, VTS curves sweep the stage temperature.
struct NoiseCurve {
    double frequency_hz = 6e9;
    SourceKind source_kind = SourceKind::sntj;
    std::vector<double> setpoints;  // volts (sntj) or kelvin (vts), strictly monotone
    std::vector<double> outputs;
    OutputUnit output_unit = OutputUnit::quanta;
    /// Physical stage temperature, used as the electron-temperature guess.
    double physical_temperature_k = 0.05;

    void validate() const;
    /// Same curve with outputs converted to quanta at the curve frequency.
    [[nodiscard]] NoiseCurve in_quanta() const;
};

enum class FitModelKind {
    single_input,         // N_out = G (N_in + N_sys)
    two_input,            // N_out = G (N_in + N_in_i + N_sys_ex)
    two_input_saturated,  // outputs divided by lambda(V), fixed N~2/(G~1 lambda) term
    ps_quadrature,        // phase-sensitive single-quadrature curve at fixed alpha
};

/// Free/fixed parameter selection for a fit.
struct FitModel {
    FitModelKind kind = FitModelKind::single_input;
    std::optional<double> fixed_t_e;         // kelvin; free when absent (SNTJ curves)
    std::optional<double> fixed_n2_over_g1;  // quanta; saturated model only
    std::optional<double> fixed_v_offs;      // volts
    std::optional<double> idler_frequency_hz;  // defaults to the signal frequency
    std::optional<double> noise_guess;       // asymptote-fit seed for the noise parameter
    const CompressionCurve* lambda = nullptr;  // saturated model only
};

struct FitWindow {
    double width_quanta = std::numeric_limits<double>::infinity();
    double setpoint_min = 0.0;
    double setpoint_max = 0.0;
    std::size_t point_count = 0;
};

struct FitResult {
    FitModelKind kind = FitModelKind::single_input;
    SourceKind source_kind = SourceKind::sntj;
    double frequency_hz = 0.0;
    double g_sys = 0.0;
    /// Fitted noise parameter: N_sys for single_input / ps_quadrature,
    /// N_sys_ex for two_input, N~1,ex for two_input_saturated.
    Quanta noise = 0.0;
    double v_offs = 0.0;
    double t_e = 0.0;
    double g_sys_err = 0.0;
    double noise_err = 0.0;
    double v_offs_err = 0.0;
    double t_e_err = 0.0;
    std::vector<double> residuals;  // fractional: model/data - 1, fitted points only
    FitWindow window;
    double residual_lag1_autocorr = 0.0;
    int iterations = 0;
    bool converged = true;
    bool bound_active = false;
    bool branch_inconsistent = false;  // asymptote branch slopes differ by > 20%
    double n2_over_g1 = 0.0;           // fixed term carried by saturated fits

    /// System-added noise: the fitted noise for single-input chains,
    /// 1/2 + excess for two-input models, 1/2 + N~1,ex + N~2/G~1 at small
    /// signal for the saturation-corrected fit.
    [[nodiscard]] Quanta system_added_noise() const;
};

// -----------------------------------------------------------------------------
// Source model evaluation
// -----------------------------------------------------------------------------

/// Input noise of the named source at one setpoint (V for SNTJ, K for VTS).
[[nodiscard]] Quanta source_input_quanta(SourceKind kind, double setpoint,
                                         double electron_temperature_k, Frequency f);

/// Value of the full SNTJ chain model
/// N_out(V) = g (sntj(V - v_offs, t_e, f_s) [+ sntj(V - v_offs, t_e, f_i)] + noise).
[[nodiscard]] double sntj_model_value(double bias_v, double g, Quanta noise, double t_e,
                                      double v_offs, Frequency f_signal,
                                      std::optional<Frequency> f_idler);

struct SntjModelGradient {
    double d_g = 0.0;
    double d_noise = 0.0;
    double d_t_e = 0.0;
    double d_v_offs = 0.0;
};

/// Analytic partial derivatives of sntj_model_value. Requires t_e > 0.
[[nodiscard]] SntjModelGradient sntj_model_gradient(double bias_v, double g, Quanta noise,
                                                    double t_e, double v_offs,
                                                    Frequency f_signal,
                                                    std::optional<Frequency> f_idler);

// -----------------------------------------------------------------------------
// Two-step fit
// -----------------------------------------------------------------------------

/// Step 1: joint linear-branch fit of the classical asymptotes
/// (per-mode source law e|V - V_offs|/(2 h f), or k_B T/(h f) for a VTS).
/// Asymptotic points satisfy e|V| >= 10 max(h f, k_B T_e_guess). Returns the
/// gain, intercept noise, and bias offset; the gain seed comes from the mean
/// absolute branch slope. Throws FitError when a branch has fewer than two
/// asymptotic points; flags slopes inconsistent beyond 20%.
[[nodiscard]] FitResult fit_asymptotes(const NoiseCurve& curve, const FitModel& model);

/// Step 2: bounded fit of the full quantum source model, seeded by
/// fit_asymptotes. V_offs stays fixed at the seed value; gain and noise move
/// within +-50% of the seed; T_e is free for SNTJ curves unless fixed.
[[nodiscard]] FitResult fit_full(const NoiseCurve& curve, const FitModel& model,
                                 const FitResult& seed);

/// Saturation-corrected fit: outputs are divided by lambda(V) point-wise and
/// the two-input model is fitted with the bias-dependent
/// n2_tilde/(g1 lambda(V)) term held fixed. The returned noise parameter is
/// N~1,ex; system_added_noise() gives 1/2 + N~1,ex + N~2/G~1 at small signal.
/// g1_small_signal is linear (not dB).
[[nodiscard]] FitResult fit_saturation_corrected(const NoiseCurve& curve,
                                                 const CompressionCurve& lambda_curve,
                                                 Quanta n2_tilde, double g1_small_signal,
                                                 FitModel model = {});

/// Fits over symmetric windows about zero bias, one per width. Widths are
/// measured in per-mode input quanta: a window keeps the setpoints whose
/// source noise does not exceed the width. Each window needs >= 6 points.
/// The first window is seeded from the full-curve asymptotes, later windows
/// from the preceding result. Residual lag-1 autocorrelation is attached.
[[nodiscard]] std::vector<FitResult> fit_window_sweep(const NoiseCurve& curve,
                                                      const FitModel& model,
                                                      std::span<const double> widths_quanta);

}  // namespace noisecal
