#include "noisecal/analysis.hpp"

#include <cmath>

namespace noisecal {

SpectralResult yfactor_spectrum(std::span<const NoiseCurve> curves, const FitModel& model) {
    if (curves.empty()) {
        throw std::invalid_argument("yfactor_spectrum: no curves");
    }
    SpectralResult out;
    out.kind = model.kind;
    out.frequencies_hz.reserve(curves.size());
    for (const NoiseCurve& curve : curves) {
        out.frequencies_hz.push_back(curve.frequency_hz);
        try {
            if (curve.setpoints.size() < 4) {
                throw FitError("bin has fewer than 4 setpoints");
            }
            const FitResult seed = fit_asymptotes(curve, model);
            const FitResult fit = fit_full(curve, model, seed);
            out.g_sys.push_back(fit.g_sys);
            out.g_sys_err.push_back(fit.g_sys_err);
            out.noise.push_back(fit.noise);
            out.noise_err.push_back(fit.noise_err);
            out.n_sys.push_back(fit.system_added_noise());
            out.ok.push_back(true);
            out.errors.emplace_back();
        } catch (const std::exception& e) {
            out.g_sys.push_back(std::numeric_limits<double>::quiet_NaN());
            out.g_sys_err.push_back(std::numeric_limits<double>::quiet_NaN());
            out.noise.push_back(std::numeric_limits<double>::quiet_NaN());
            out.noise_err.push_back(std::numeric_limits<double>::quiet_NaN());
            out.n_sys.push_back(std::numeric_limits<double>::quiet_NaN());
            out.ok.push_back(false);
            out.errors.emplace_back(e.what());
        }
    }
    return out;
}

std::vector<TransmissionEfficiency> efficiency_spectrum(const SpectralResult& near_plane,
                                                        const SpectralResult& far_plane) {
    if (near_plane.size() != far_plane.size()) {
        throw std::invalid_argument("efficiency_spectrum: frequency grid size mismatch");
    }
    std::vector<TransmissionEfficiency> out;
    out.reserve(near_plane.size());
    for (std::size_t i = 0; i < near_plane.size(); ++i) {
        const double fa = near_plane.frequencies_hz[i];
        const double fb = far_plane.frequencies_hz[i];
        if (std::abs(fa - fb) > 1e-6 * std::max(fa, fb)) {
            throw std::invalid_argument("efficiency_spectrum: frequency grids do not match");
        }
        if (!near_plane.ok[i] || !far_plane.ok[i]) {
            TransmissionEfficiency bad;
            bad.eta = std::numeric_limits<double>::quiet_NaN();
            bad.insertion_loss_db = std::numeric_limits<double>::quiet_NaN();
            out.push_back(bad);
            continue;
        }
        out.push_back(efficiency_from_gains(near_plane.g_sys[i], far_plane.g_sys[i]));
    }
    return out;
}

std::vector<CorrectedBin> corrected_spectrum(const SpectralResult& result,
                                             std::span<const TransmissionEfficiency> efficiencies,
                                             Quanta n_t1) {
    if (result.size() != efficiencies.size()) {
        throw std::invalid_argument("corrected_spectrum: grid size mismatch");
    }
    std::vector<CorrectedBin> out;
    out.reserve(result.size());
    for (std::size_t i = 0; i < result.size(); ++i) {
        CorrectedBin bin;
        bin.frequency_hz = result.frequencies_hz[i];
        if (!result.ok[i] || !std::isfinite(efficiencies[i].eta)) {
            bin.ok = false;
            bin.n_sys_corrected = std::numeric_limits<double>::quiet_NaN();
            out.push_back(bin);
            continue;
        }
        // The correction acts on the excess noise; the half quantum of the
        // cold idler input is put back afterwards.
        const Quanta excess = result.n_sys[i] - 0.5;
        const double eta = std::min(efficiencies[i].eta, 1.0);
        const PlaneCorrection corr = move_reference_plane(excess, eta, n_t1);
        bin.n_sys_corrected = corr.excess + 0.5;
        bin.unphysical = corr.unphysical;
        out.push_back(bin);
    }
    return out;
}

double noise_rise(double g1, Quanta n_in, Quanta n1, Quanta n2_tilde) {
    detail::require_positive(g1, "first-stage gain");
    detail::require_positive(n_in, "input noise");
    detail::require_nonnegative(n1, "first-stage noise");
    detail::require_nonnegative(n2_tilde, "second-stage noise");
    return g1 * (n_in + n1) / (n_in + n2_tilde);
}

NoiseRiseEstimate n1_from_noise_rise(double g1, Quanta n_in, Quanta n2_tilde, double r) {
    detail::require_positive(g1, "first-stage gain");
    detail::require_positive(n_in, "input noise");
    detail::require_nonnegative(n2_tilde, "second-stage noise");
    detail::require_positive(r, "noise rise");
    NoiseRiseEstimate out;
    out.n1 = (r / g1) * (n_in + n2_tilde) - n_in;
    out.unphysical = out.n1 < 0.0;
    return out;
}

PsPrediction ps_predictive_model(double m_gain, double g_sys_hemt, Quanta n_sys_hemt,
                                 Quanta m_noise, std::span<const double> alpha_grid) {
    if (m_gain <= 1.0) {
        throw std::invalid_argument("maximal phase-sensitive gain must exceed 1");
    }
    detail::require_positive(g_sys_hemt, "HEMT chain gain");
    detail::require_nonnegative(n_sys_hemt, "HEMT chain noise");
    detail::require_nonnegative(m_noise, "minimum noise");
    if (alpha_grid.empty()) {
        throw std::invalid_argument("ps_predictive_model: empty angle grid");
    }
    PsPrediction out;
    out.alpha.assign(alpha_grid.begin(), alpha_grid.end());
    out.g_sys.reserve(alpha_grid.size());
    out.n_sys.reserve(alpha_grid.size());
    // G~ is maximal at alpha = 0 (M > 1), so min over alpha of N_H/G~ is N_H/M.
    const double min_term = n_sys_hemt / m_gain;
    for (double alpha : alpha_grid) {
        const double c = std::cos(alpha);
        const double s = std::sin(alpha);
        const double gain_eff = m_gain * c * c + s * s / m_gain;
        out.g_sys.push_back(g_sys_hemt * gain_eff);
        out.n_sys.push_back(m_noise + n_sys_hemt / gain_eff - min_term);
    }
    return out;
}

MisinterpretationReport model_misinterpretation_report(const NoiseCurve& curve) {
    FitModel single;
    single.kind = FitModelKind::single_input;
    FitModel two;
    two.kind = FitModelKind::two_input;

    MisinterpretationReport out;
    out.single_input = fit_asymptotes(curve, single);
    out.two_input = fit_asymptotes(curve, two);
    out.slope_ratio = out.single_input.g_sys / out.two_input.g_sys;
    out.n_sys_single = out.single_input.system_added_noise();
    out.n_sys_two = out.two_input.system_added_noise();
    return out;
}

}  // namespace noisecal
