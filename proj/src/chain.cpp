#include "noisecal/chain.hpp"

#include <cmath>

#include "noisecal/sources.hpp"

namespace noisecal {

namespace {

void validate_loss(const LossStage& loss) {
    detail::require_finite(loss.efficiency, "efficiency");
    if (loss.efficiency <= 0.0 || loss.efficiency > 1.0) {
        throw std::invalid_argument("loss efficiency must be in (0, 1]");
    }
    detail::require_nonnegative(loss.temperature_k, "loss temperature");
}

void validate_amplifier(const AmplifierStage& amp) {
    detail::require_finite(amp.gain, "gain");
    if (amp.gain < 1.0) {
        throw std::invalid_argument("amplifier gain must be >= 1");
    }
    detail::require_nonnegative(amp.added_noise, "added noise");
}

}  // namespace

EffectiveAmplifier compose_stage(const LossStage& loss, const AmplifierStage& amp, Frequency f) {
    validate_loss(loss);
    validate_amplifier(amp);
    const Quanta n_t = johnson_noise(loss.temperature_k, f);
    EffectiveAmplifier eff;
    eff.gain = loss.efficiency * amp.gain;
    eff.added_noise = ((1.0 - loss.efficiency) * n_t + amp.added_noise) / loss.efficiency;
    return eff;
}

EffectiveAmplifier reduce_chain(std::span<const ChainStage> stages, Frequency f) {
    if (stages.empty()) {
        throw std::invalid_argument("reduce_chain: chain must contain at least one stage");
    }
    EffectiveAmplifier total{1.0, 0.0};
    double gain_before = 1.0;
    for (const ChainStage& stage : stages) {
        const EffectiveAmplifier eff = compose_stage(stage.loss, stage.amplifier, f);
        total.added_noise += eff.added_noise / gain_before;
        gain_before *= eff.gain;
    }
    total.gain = gain_before;
    return total;
}

Quanta chain_output(const EffectiveAmplifier& eff, Quanta n_in) {
    detail::require_nonnegative(n_in, "input noise");
    return eff.gain * (n_in + eff.added_noise);
}

PlaneCorrection move_reference_plane(double n_sys_ex, double eta1, Quanta n_t1) {
    detail::require_finite(n_sys_ex, "system-excess noise");
    detail::require_nonnegative(n_t1, "loss-stage quanta");
    if (eta1 <= 0.0 || eta1 > 1.0) {
        throw std::invalid_argument("efficiency must be in (0, 1]");
    }
    PlaneCorrection out;
    out.excess = eta1 * n_sys_ex - 2.0 * (1.0 - eta1) * n_t1;
    out.unphysical = out.excess < 0.0;
    return out;
}

PlaneCorrection move_reference_plane(double n_sys_ex, double eta_signal, double eta_idler,
                                     Quanta n_t1) {
    detail::require_finite(n_sys_ex, "system-excess noise");
    detail::require_nonnegative(n_t1, "loss-stage quanta");
    if (eta_signal <= 0.0 || eta_signal > 1.0 || eta_idler <= 0.0 || eta_idler > 1.0) {
        throw std::invalid_argument("efficiencies must be in (0, 1]");
    }
    // The loss contributes (1-eta)N_T/eta per path; the intrinsic excess,
    // assumed split evenly, is scaled by the harmonic mean of the two
    // efficiencies. Equal efficiencies recover the two-argument form.
    const double loss_term =
        (1.0 - eta_signal) / eta_signal * n_t1 + (1.0 - eta_idler) / eta_idler * n_t1;
    const double harmonic = 2.0 * eta_signal * eta_idler / (eta_signal + eta_idler);
    PlaneCorrection out;
    out.excess = harmonic * (n_sys_ex - loss_term);
    out.unphysical = out.excess < 0.0;
    return out;
}

TransmissionEfficiency efficiency_from_gains(double g_near, double g_far) {
    detail::require_positive(g_near, "near-plane gain");
    detail::require_positive(g_far, "far-plane gain");
    TransmissionEfficiency out;
    out.eta = g_near / g_far;
    out.insertion_loss_db = -10.0 * std::log10(out.eta);
    out.inconsistent = out.eta > 1.0;
    return out;
}

}  // namespace noisecal
