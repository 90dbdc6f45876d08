#include "noisecal/synth.hpp"

#include <cmath>
#include <numbers>

namespace noisecal {

// =============================================================================
// Acquisition
// =============================================================================

void AcquisitionSettings::validate() const {
    detail::require_positive(rbw_hz, "RBW");
    detail::require_positive(vbw_hz, "VBW");
    detail::require_positive(sweep_time_s, "sweep time");
    if (points_per_sweep <= 0 || trace_averages <= 0) {
        throw std::invalid_argument("acquisition counts must be positive");
    }
    if (vbw_hz > rbw_hz) {
        throw std::invalid_argument("VBW must not exceed RBW for point-wise averaging");
    }
}

double AcquisitionSettings::effective_averages() const {
    validate();
    const double per_point = rbw_hz * (sweep_time_s / points_per_sweep);
    return trace_averages * std::max(1.0, per_point);
}

double AcquisitionSettings::relative_sigma() const {
    return 1.0 / std::sqrt(effective_averages());
}

AcquisitionSettings AcquisitionSettings::wideband() {
    AcquisitionSettings a;
    a.rbw_hz = 8e6;
    a.vbw_hz = 15e3;
    a.points_per_sweep = 501;
    a.sweep_time_s = 0.05;
    a.trace_averages = 1500;
    return a;
}

AcquisitionSettings AcquisitionSettings::small_bias() {
    AcquisitionSettings a;
    a.rbw_hz = 8e6;
    a.vbw_hz = 8e6;
    a.points_per_sweep = 501;
    a.sweep_time_s = 0.05;
    a.trace_averages = 1;
    return a;
}

// =============================================================================
// Deterministic randomness
// =============================================================================

double GaussianStream::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on fixed-layout uniforms; mt19937_64 output is specified by
    // the standard, so the stream is identical everywhere.
    const double u1 =
        (static_cast<double>(rng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);  // (0,1)
    const double u2 =
        static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);          // [0,1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t derive_subseed(std::uint64_t seed, std::uint64_t counter) {
    // splitmix64 finalizer over the combined state
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// =============================================================================
// Forward models
// =============================================================================

namespace {

Quanta source_quanta(const SourceSpec& source, double setpoint, Frequency f) {
    return source_input_quanta(source.kind, setpoint, source.electron_temperature_k, f);
}

}  // namespace

Quanta forward_output(const ForwardModel& model, const SourceSpec& source, double setpoint,
                      Frequency f) {
    return std::visit(
        [&](const auto& m) -> Quanta {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, SingleInputChainModel>) {
                return m.g_sys * (source_quanta(source, setpoint, f) + m.n_sys);
            } else if constexpr (std::is_same_v<M, TwoInputChainModel>) {
                const Frequency fi(m.idler_frequency_hz.value_or(f.hertz()));
                return m.g_sys * (source_quanta(source, setpoint, f) +
                                  source_quanta(source, setpoint, fi) + m.n_sys_ex);
            } else {
                if (source.kind != SourceKind::sntj) {
                    throw std::invalid_argument(
                        "saturated forward model needs an SNTJ bias sweep");
                }
                const Frequency fi(m.idler_frequency_hz.value_or(f.hertz()));
                SntjSource junction;
                junction.electron_temperature_k = source.electron_temperature_k;
                const Quanta n2_tilde = m.n2_over_g1 * m.lambda.small_signal_gain();
                return saturated_chain_output(m.lambda, setpoint, junction, f, fi, m.n_ex_tilde,
                                              n2_tilde, m.g_sys);
            }
        },
        model);
}

NoiseCurve generate_curve(const ForwardModel& model, const SourceSpec& source,
                          std::span<const double> setpoints, Frequency f,
                          const std::optional<AcquisitionSettings>& acq) {
    if (setpoints.empty()) {
        throw std::invalid_argument("generate_curve: no setpoints");
    }
    NoiseCurve curve;
    curve.frequency_hz = f.hertz();
    curve.source_kind = source.kind;
    curve.physical_temperature_k =
        source.kind == SourceKind::sntj ? source.electron_temperature_k : 0.05;
    curve.setpoints.assign(setpoints.begin(), setpoints.end());
    curve.outputs.reserve(setpoints.size());
    for (double s : setpoints) {
        curve.outputs.push_back(forward_output(model, source, s, f));
    }
    if (acq) {
        const double sigma = acq->relative_sigma();
        GaussianStream normal(acq->rng_seed);
        for (double& y : curve.outputs) {
            y *= 1.0 + sigma * normal.next();
            if (y <= 0.0) {
                throw std::runtime_error(
                    "generate_curve: acquisition noise model invalid at this variance");
            }
        }
    }
    curve.validate();
    return curve;
}

std::vector<NoiseCurve> generate_spectrum(const ForwardModel& model, const SourceSpec& source,
                                          std::span<const double> setpoints,
                                          std::span<const double> frequencies_hz,
                                          const std::optional<AcquisitionSettings>& acq) {
    if (frequencies_hz.empty()) {
        throw std::invalid_argument("generate_spectrum: no frequencies");
    }
    std::vector<NoiseCurve> curves;
    curves.reserve(frequencies_hz.size());
    for (std::size_t k = 0; k < frequencies_hz.size(); ++k) {
        std::optional<AcquisitionSettings> bin_acq = acq;
        if (bin_acq) {
            bin_acq->rng_seed = derive_subseed(acq->rng_seed, k);
        }
        curves.push_back(
            generate_curve(model, source, setpoints, Frequency(frequencies_hz[k]), bin_acq));
    }
    return curves;
}

// =============================================================================
// Sweep helpers
// =============================================================================

std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 2) {
        throw std::invalid_argument("linspace: need at least two points");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    }
    return out;
}

std::vector<double> sntj_bias_sweep(int count, double span_kelvin) {
    detail::require_positive(span_kelvin, "bias span");
    const double v_span = 2.0 * phys::boltzmann * span_kelvin / phys::electron_charge;
    return linspace(-v_span, v_span, count);
}

CompressionCurve make_logistic_compression(double v_1db, double sharpness,
                                           double v_max_over_v1db, int samples) {
    detail::require_positive(v_1db, "1 dB bias");
    detail::require_positive(sharpness, "sharpness");
    if (v_max_over_v1db <= 1.0) {
        throw std::invalid_argument("compression curve must extend past the 1 dB point");
    }
    if (samples < 5) {
        throw std::invalid_argument("compression curve needs >= 5 samples");
    }
    const double target = std::pow(10.0, -0.1);

    // lambda(u) = (1 + e^(-a u0)) / (1 + e^(a (u - u0))) with u = (V/v_1db)^2
    // equals 1 at u = 0 by construction; pick u0 so lambda(1) is exactly 1 dB
    // down. lambda(1) decreases monotonically as u0 decreases, so bisect.
    const double a = sharpness;
    auto lambda_at = [&](double u, double u0) {
        return (1.0 + std::exp(-a * u0)) / (1.0 + std::exp(a * (u - u0)));
    };
    double lo = 0.0;
    double hi = 64.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lambda_at(1.0, mid) < target ? lo : hi) = mid;
    }
    const double u0 = 0.5 * (lo + hi);

    const double v_max = v_max_over_v1db * v_1db;
    std::vector<double> bias = linspace(-v_max, v_max, samples);
    std::vector<double> lambda(bias.size());
    for (std::size_t i = 0; i < bias.size(); ++i) {
        const double u = (bias[i] / v_1db) * (bias[i] / v_1db);
        lambda[i] = lambda_at(u, u0);
    }
    return CompressionCurve::from_lambda(std::move(bias), std::move(lambda));
}

}  // namespace noisecal
