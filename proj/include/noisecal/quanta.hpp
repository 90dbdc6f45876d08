#pragma once

// =============================================================================
// noisecal - photon-normalized noise units
// =============================================================================
// Physical constants and conversions between the three currencies used for
// microwave noise: power spectral density (W/Hz), noise temperature (K), and
// photon-normalized quanta N = P/(h nu). Quanta are the only noise unit that
// crosses module boundaries; everything else is SI.
// =============================================================================

#include <cmath>
#include <stdexcept>
#include <string>

namespace noisecal {

/// Photon-normalized noise power spectral density, N = P/(h nu).
/// Dimensionless. Vacuum fluctuations contribute 1/2; excess-noise
/// quantities may be any non-negative value.
using Quanta = double;

namespace phys {

// CODATA 2018 exact SI values, fixed at build time.
inline constexpr double planck = 6.62607015e-34;            // J s
inline constexpr double boltzmann = 1.380649e-23;           // J / K
inline constexpr double electron_charge = 1.602176634e-19;  // C

/// k_B/e, approximately 86.17 uV/K.
inline constexpr double volts_per_kelvin = boltzmann / electron_charge;

}  // namespace phys

namespace detail {

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument(std::string(what) + " must be finite");
    }
}

inline void require_nonnegative(double x, const char* what) {
    require_finite(x, what);
    if (x < 0.0) {
        throw std::invalid_argument(std::string(what) + " must be >= 0");
    }
}

inline void require_positive(double x, const char* what) {
    require_finite(x, what);
    if (x <= 0.0) {
        throw std::invalid_argument(std::string(what) + " must be > 0");
    }
}

}  // namespace detail

/// Strictly positive photon frequency.
class Frequency {
public:
    explicit Frequency(double hz) : hertz_(hz) {
        detail::require_positive(hz, "frequency");
    }

    [[nodiscard]] static Frequency gigahertz(double ghz) { return Frequency(ghz * 1e9); }
    [[nodiscard]] static Frequency megahertz(double mhz) { return Frequency(mhz * 1e6); }

    [[nodiscard]] double hertz() const { return hertz_; }

    /// Single photon energy h*nu in joules.
    [[nodiscard]] double photon_energy() const { return phys::planck * hertz_; }

private:
    double hertz_;
};

/// Convert a power spectral density (W/Hz) to photon-normalized quanta.
[[nodiscard]] inline Quanta quanta_from_psd(double watts_per_hz, Frequency f) {
    detail::require_nonnegative(watts_per_hz, "power spectral density");
    return watts_per_hz / f.photon_energy();
}

/// Inverse of quanta_from_psd.
[[nodiscard]] inline double psd_from_quanta(Quanta n, Frequency f) {
    detail::require_nonnegative(n, "quanta");
    return n * f.photon_energy();
}

/// Equivalent noise temperature T_N = N * h * nu / k_B (classical convention).
[[nodiscard]] inline double noise_temperature(Quanta n, Frequency f) {
    detail::require_nonnegative(n, "quanta");
    return n * f.photon_energy() / phys::boltzmann;
}

}  // namespace noisecal
