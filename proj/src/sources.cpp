#include "noisecal/sources.hpp"

#include <algorithm>
#include <cmath>

namespace noisecal {

double coth(double x) {
    if (std::abs(x) < 1e-4) {
        // Laurent series around 0 avoids catastrophic cancellation.
        return 1.0 / x + x / 3.0 - x * x * x / 45.0;
    }
    if (std::abs(x) > 20.0) {
        return x > 0.0 ? 1.0 : -1.0;
    }
    return 1.0 / std::tanh(x);
}

double xcoth(double x) {
    const double a = std::abs(x);
    if (a < 1e-4) {
        const double a2 = a * a;
        return 1.0 + a2 / 3.0 - a2 * a2 / 45.0;
    }
    if (a > 20.0) {
        return a;
    }
    return a / std::tanh(a);
}

Quanta johnson_noise(double temperature_k, Frequency f) {
    detail::require_nonnegative(temperature_k, "temperature");
    if (temperature_k == 0.0) {
        return 0.5;  // vacuum limit
    }
    const double x = f.photon_energy() / (2.0 * phys::boltzmann * temperature_k);
    return 0.5 * coth(x);
}

Quanta sntj_noise(double bias_v, double electron_temperature_k, Frequency f) {
    detail::require_finite(bias_v, "bias voltage");
    detail::require_nonnegative(electron_temperature_k, "electron temperature");
    const double hf = f.photon_energy();
    const double ev = phys::electron_charge * std::abs(bias_v);
    if (electron_temperature_k == 0.0) {
        // Piecewise closed form: the coth arguments diverge at T_e = 0.
        return std::max(0.5, ev / (2.0 * hf));
    }
    // (eV +- hf)/(4hf) coth((eV +- hf)/(2 k_B T_e)) recast with x*coth(x),
    // which is even and finite through eV = hf.
    const double kt2 = 2.0 * phys::boltzmann * electron_temperature_k;
    const double up = (ev + hf) / kt2;
    const double um = (ev - hf) / kt2;
    return (kt2 / (4.0 * hf)) * (xcoth(up) + xcoth(um));
}

namespace {

void check_limit_domain(double neglected, double retained_a, double retained_b,
                        const char* what) {
    if (neglected > 0.1 * std::min(retained_a, retained_b)) {
        throw std::invalid_argument(std::string("sntj_limit: ") + what +
                                    " is not negligible against the retained scales");
    }
}

}  // namespace

Quanta sntj_limit(double bias_v, double electron_temperature_k, Frequency f, SntjLimit which) {
    detail::require_finite(bias_v, "bias voltage");
    detail::require_nonnegative(electron_temperature_k, "electron temperature");
    const double hf = f.photon_energy();
    const double ev = phys::electron_charge * std::abs(bias_v);
    const double kt = phys::boltzmann * electron_temperature_k;

    switch (which) {
        case SntjLimit::zero_bias:
            check_limit_domain(ev, hf, kt, "e|V|");
            return johnson_noise(electron_temperature_k, f);
        case SntjLimit::zero_frequency: {
            check_limit_domain(hf, ev, kt, "h*f");
            // (eV/2) coth(eV/(2 k_B T_e)) in W/Hz, normalized at the
            // measurement frequency; smooth through V = 0.
            return (kt / hf) * xcoth(ev / (2.0 * kt));
        }
        case SntjLimit::zero_temperature:
            check_limit_domain(kt, ev, hf, "k_B*T_e");
            return std::max(0.5, ev / (2.0 * hf));
    }
    throw std::invalid_argument("sntj_limit: unsupported case");
}

double johnson_psd_w_per_hz(double temperature_k) {
    detail::require_nonnegative(temperature_k, "temperature");
    return phys::boltzmann * temperature_k;
}

double johnson_psd_v2_per_hz(double temperature_k, double resistance_ohm) {
    detail::require_nonnegative(temperature_k, "temperature");
    detail::require_positive(resistance_ohm, "resistance");
    return 4.0 * phys::boltzmann * temperature_k * resistance_ohm;
}

double shot_psd_w_per_hz(double bias_v) {
    detail::require_finite(bias_v, "bias voltage");
    return phys::electron_charge * std::abs(bias_v) / 2.0;
}

double shot_psd_a2_per_hz(double current_a) {
    detail::require_finite(current_a, "current");
    return 2.0 * phys::electron_charge * std::abs(current_a);
}

double BiasNetwork::division_ratio() const {
    detail::require_nonnegative(series_resistance_ohm, "series resistance");
    detail::require_positive(junction_impedance_ohm, "junction impedance");
    return series_resistance_ohm / junction_impedance_ohm + 1.0;
}

double BiasNetwork::junction_voltage(double awg_voltage) const {
    detail::require_finite(awg_voltage, "source voltage");
    return awg_voltage / division_ratio();
}

double voltage_temperature_equivalent(double bias_v, VoltsToKelvin convention) {
    detail::require_finite(bias_v, "bias voltage");
    const double ev_over_kb = std::abs(bias_v) / phys::volts_per_kelvin;
    return convention == VoltsToKelvin::ev_over_kb ? ev_over_kb : ev_over_kb / 2.0;
}

}  // namespace noisecal
