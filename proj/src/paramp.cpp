#include "noisecal/paramp.hpp"

#include <algorithm>
#include <cmath>

namespace noisecal {

namespace {

void validate_pi(const PhaseInsensitiveParamp& p) {
    detail::require_finite(p.gain_ss, "signal gain");
    detail::require_finite(p.gain_is, "idler gain");
    if (p.gain_ss < 1.0) {
        throw std::invalid_argument("signal gain must be >= 1");
    }
    if (p.gain_is < 0.0) {
        throw std::invalid_argument("idler gain must be >= 0");
    }
    detail::require_nonnegative(p.excess_ss, "signal excess noise");
    detail::require_nonnegative(p.excess_is, "idler excess noise");
    if (p.eta_s <= 0.0 || p.eta_s > 1.0) {
        throw std::invalid_argument("signal efficiency must be in (0, 1]");
    }
    if (p.eta_i < 0.0 || p.eta_i > 1.0) {
        throw std::invalid_argument("idler efficiency must be in [0, 1]");
    }
    detail::require_nonnegative(p.loss_temperature_k, "loss temperature");
}

}  // namespace

Quanta pi_output_ideal(double g1, Quanta n_in, Quanta n_in_i) {
    detail::require_finite(g1, "gain");
    if (g1 < 1.0) {
        throw std::invalid_argument("gain must be >= 1");
    }
    detail::require_nonnegative(n_in, "signal input");
    detail::require_nonnegative(n_in_i, "idler input");
    return g1 * n_in + (g1 - 1.0) * n_in_i;
}

Quanta pi_output_nonideal(const PhaseInsensitiveParamp& p, Quanta n_in, Quanta n_in_i,
                          Frequency f) {
    validate_pi(p);
    detail::require_nonnegative(n_in, "signal input");
    detail::require_nonnegative(n_in_i, "idler input");
    const Quanta n_t = johnson_noise(p.loss_temperature_k, f);
    return p.gain_ss * (p.eta_s * n_in + (1.0 - p.eta_s) * n_t + p.excess_ss) +
           p.gain_is * (p.eta_i * n_in_i + (1.0 - p.eta_i) * n_t + p.excess_is);
}

Quanta effective_excess_noise(const PhaseInsensitiveParamp& p, Frequency f) {
    validate_pi(p);
    if (p.eta_i == 0.0) {
        throw std::invalid_argument(
            "effective excess noise is undefined for a filtered idler (eta_i = 0)");
    }
    const Quanta n_t = johnson_noise(p.loss_temperature_k, f);
    const double ratio = p.effective_gain_is() / p.effective_gain_ss();
    return ((1.0 - p.eta_s) * n_t + p.excess_ss) / p.eta_s +
           ratio * ((1.0 - p.eta_i) * n_t + p.excess_is) / p.eta_i;
}

ExcessBounds asymmetry_intercept_bounds(Quanta n_ex_tilde, double ratio_lo, double ratio_hi) {
    detail::require_nonnegative(n_ex_tilde, "excess noise");
    detail::require_positive(ratio_lo, "ratio lower bound");
    if (ratio_hi < ratio_lo) {
        throw std::invalid_argument("ratio range must satisfy lo <= hi");
    }
    return ExcessBounds{2.0 * n_ex_tilde / (1.0 + ratio_hi),
                        2.0 * n_ex_tilde / (1.0 + ratio_lo)};
}

// -----------------------------------------------------------------------------
// CompressionCurve
// -----------------------------------------------------------------------------

CompressionCurve CompressionCurve::from_lambda(std::vector<double> bias_v,
                                               std::vector<double> lambda) {
    if (bias_v.size() != lambda.size() || bias_v.size() < 2) {
        throw std::invalid_argument("compression curve needs >= 2 matching samples");
    }
    for (std::size_t i = 0; i < bias_v.size(); ++i) {
        detail::require_finite(bias_v[i], "bias sample");
        detail::require_finite(lambda[i], "lambda sample");
        if (lambda[i] <= 0.0) {
            throw std::invalid_argument("lambda samples must be > 0");
        }
        if (i > 0 && bias_v[i] <= bias_v[i - 1]) {
            throw std::invalid_argument("bias samples must be strictly increasing");
        }
    }
    CompressionCurve c;
    c.bias_ = std::move(bias_v);
    c.lambda_ = std::move(lambda);
    c.build_tangents();
    return c;
}

CompressionCurve CompressionCurve::from_gain_db(std::vector<double> bias_v,
                                                std::vector<double> gain_db) {
    if (bias_v.size() != gain_db.size() || bias_v.size() < 2) {
        throw std::invalid_argument("compression curve needs >= 2 matching samples");
    }
    // Small-signal reference: the sample closest to zero bias.
    std::size_t ref = 0;
    for (std::size_t i = 1; i < bias_v.size(); ++i) {
        if (std::abs(bias_v[i]) < std::abs(bias_v[ref])) {
            ref = i;
        }
    }
    const double ref_db = gain_db[ref];
    std::vector<double> lambda(gain_db.size());
    for (std::size_t i = 0; i < gain_db.size(); ++i) {
        lambda[i] = std::pow(10.0, (gain_db[i] - ref_db) / 10.0);
    }
    CompressionCurve c = from_lambda(std::move(bias_v), std::move(lambda));
    c.small_signal_gain_ = std::pow(10.0, ref_db / 10.0);
    return c;
}

void CompressionCurve::build_tangents() {
    // Fritsch-Carlson monotone cubic tangents: interpolation never overshoots
    // the samples, so lambda stays within the sampled range between knots.
    const std::size_t n = bias_.size();
    std::vector<double> secant(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        secant[i] = (lambda_[i + 1] - lambda_[i]) / (bias_[i + 1] - bias_[i]);
    }
    tangent_.assign(n, 0.0);
    tangent_[0] = secant[0];
    tangent_[n - 1] = secant[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (secant[i - 1] * secant[i] <= 0.0) {
            tangent_[i] = 0.0;
        } else {
            tangent_[i] = 0.5 * (secant[i - 1] + secant[i]);
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (secant[i] == 0.0) {
            tangent_[i] = 0.0;
            tangent_[i + 1] = 0.0;
            continue;
        }
        const double a = tangent_[i] / secant[i];
        const double b = tangent_[i + 1] / secant[i];
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double t = 3.0 / std::sqrt(s);
            tangent_[i] = t * a * secant[i];
            tangent_[i + 1] = t * b * secant[i];
        }
    }
}

bool CompressionCurve::covers(double bias_v) const {
    return bias_v >= bias_.front() && bias_v <= bias_.back();
}

double CompressionCurve::lambda(double bias_v) const {
    detail::require_finite(bias_v, "bias");
    if (!covers(bias_v)) {
        throw std::out_of_range("compression curve does not cover the requested bias");
    }
    const auto upper = std::upper_bound(bias_.begin(), bias_.end(), bias_v);
    std::size_t i = static_cast<std::size_t>(upper - bias_.begin());
    if (i > 0) {
        --i;
    }
    if (i + 1 >= bias_.size()) {
        i = bias_.size() - 2;
    }
    const double h = bias_[i + 1] - bias_[i];
    const double t = (bias_v - bias_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * lambda_[i] + h10 * h * tangent_[i] + h01 * lambda_[i + 1] +
           h11 * h * tangent_[i + 1];
}

double CompressionCurve::one_db_compression_bias() const {
    const double target = std::pow(10.0, -0.1);
    // Walk outward from zero on the positive side and find the first
    // crossing; refine by bisection on the interpolant.
    double lo = std::max(0.0, bias_.front());
    if (lambda(lo) <= target) {
        return lo;
    }
    const int steps = 512;
    const double hi_end = bias_.back();
    double prev = lo;
    for (int k = 1; k <= steps; ++k) {
        const double v = lo + (hi_end - lo) * static_cast<double>(k) / steps;
        if (lambda(v) <= target) {
            double a = prev;
            double b = v;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (a + b);
                (lambda(mid) > target ? a : b) = mid;
            }
            return 0.5 * (a + b);
        }
        prev = v;
    }
    throw std::runtime_error("compression curve never reaches the 1 dB point");
}

Quanta saturated_chain_output(const CompressionCurve& curve, double bias_v,
                              const SntjSource& source, Frequency f_signal, Frequency f_idler,
                              Quanta n_ex_tilde, Quanta n2_tilde, double g_sys) {
    detail::require_nonnegative(n_ex_tilde, "effective excess noise");
    detail::require_nonnegative(n2_tilde, "second-stage noise");
    detail::require_positive(g_sys, "system gain");
    const double lam = curve.lambda(bias_v);
    if (lam <= 0.0) {
        throw std::invalid_argument("lambda must be > 0");
    }
    const Quanta n_s = sntj_noise(bias_v, source.electron_temperature_k, f_signal);
    const Quanta n_i = sntj_noise(bias_v, source.electron_temperature_k, f_idler);
    const double g1_tilde = curve.small_signal_gain();
    return g_sys * lam * (n_s + n_i + n_ex_tilde + n2_tilde / (g1_tilde * lam));
}

// -----------------------------------------------------------------------------
// Phase-sensitive case
// -----------------------------------------------------------------------------

double ps_gain(double g1, double alpha) {
    detail::require_finite(g1, "gain");
    if (g1 < 1.0) {
        throw std::invalid_argument("gain must be >= 1");
    }
    detail::require_finite(alpha, "quadrature angle");
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    return 4.0 * g1 * c * c + s * s / (4.0 * g1);
}

QuadratureVariances ps_quadrature_variances(const PhaseSensitiveParamp& p, Quanta n_in) {
    if (n_in < 0.5) {
        throw std::invalid_argument("input noise must be >= 1/2 quanta");
    }
    if (p.eta_s <= 0.0 || p.eta_s > 1.0 || p.eta_i <= 0.0 || p.eta_i > 1.0) {
        throw std::invalid_argument("efficiencies must be in (0, 1]");
    }
    const double root = std::sqrt(p.eta_s * p.eta_i);
    return QuadratureVariances{4.0 * p.gain * root * n_in, root / (4.0 * p.gain) * n_in};
}

Quanta ps_chain_output(const PhaseSensitiveParamp& p, double alpha, Quanta n_in,
                       double g2_tilde, Quanta n2_tilde) {
    detail::require_nonnegative(n_in, "input noise");
    detail::require_positive(g2_tilde, "second-stage gain");
    detail::require_nonnegative(n2_tilde, "second-stage noise");
    if (p.eta_s <= 0.0 || p.eta_s > 1.0 || p.eta_i <= 0.0 || p.eta_i > 1.0) {
        throw std::invalid_argument("efficiencies must be in (0, 1]");
    }
    const double root = std::sqrt(p.eta_s * p.eta_i);
    const double g1_eff = root * ps_gain(p.gain, alpha);
    const Quanta excess_eff = p.excess / root;
    return g2_tilde * g1_eff * (n_in + excess_eff + n2_tilde / g1_eff);
}

}  // namespace noisecal
