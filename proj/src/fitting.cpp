#include "noisecal/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace noisecal {

// =============================================================================
// Small dense linear algebra (normal equations are at most a few parameters)
// =============================================================================

namespace {

// In-place Cholesky of a symmetric positive definite matrix stored row-major.
// Returns false when the matrix is not positive definite.
bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum)) {
                    return false;
                }
                a[i * n + i] = std::sqrt(sum);
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    return true;
}

void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        double sum = x[i];
        for (std::size_t k = 0; k < i; ++k) {
            sum -= l[i * n + k] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) {
            sum -= l[k * n + ii] * x[k];
        }
        x[ii] = sum / l[ii * n + ii];
    }
}

// Inverse of an SPD matrix through its Cholesky factor; false on failure.
bool spd_inverse(std::vector<double> a, std::size_t n, std::vector<double>& inv) {
    if (!cholesky(a, n)) {
        return false;
    }
    inv.assign(n * n, 0.0);
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        cholesky_solve(a, n, e);
        for (std::size_t i = 0; i < n; ++i) {
            inv[i * n + j] = e[i];
        }
    }
    return true;
}

double condition_estimate_from_diag(const std::vector<double>& a, std::size_t n) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(a[i * n + i]);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// =============================================================================
// Bound transforms (MINUIT-style): the engine iterates on an unconstrained
// internal parameter, mapped smoothly into the feasible interval.
// =============================================================================

struct BoundTransform {
    enum class Kind { free, lower, upper, both } kind = Kind::free;
    double lo = 0.0;
    double hi = 0.0;

    static BoundTransform from(const ParameterBound& b) {
        BoundTransform t;
        const bool has_lo = std::isfinite(b.lower);
        const bool has_hi = std::isfinite(b.upper);
        t.lo = b.lower;
        t.hi = b.upper;
        if (has_lo && has_hi) {
            t.kind = Kind::both;
        } else if (has_lo) {
            t.kind = Kind::lower;
        } else if (has_hi) {
            t.kind = Kind::upper;
        }
        return t;
    }

    [[nodiscard]] double external(double theta) const {
        switch (kind) {
            case Kind::free:
                return theta;
            case Kind::lower:
                return lo + (std::sqrt(theta * theta + 1.0) - 1.0);
            case Kind::upper:
                return hi - (std::sqrt(theta * theta + 1.0) - 1.0);
            case Kind::both:
                return lo + (hi - lo) * (std::sin(theta) + 1.0) / 2.0;
        }
        return theta;
    }

    [[nodiscard]] double internal(double p) const {
        switch (kind) {
            case Kind::free:
                return p;
            case Kind::lower: {
                const double s = p - lo + 1.0;
                return std::sqrt(std::max(s * s - 1.0, 0.0));
            }
            case Kind::upper: {
                const double s = hi - p + 1.0;
                return std::sqrt(std::max(s * s - 1.0, 0.0));
            }
            case Kind::both: {
                const double u = std::clamp(2.0 * (p - lo) / (hi - lo) - 1.0, -1.0, 1.0);
                return std::asin(u);
            }
        }
        return p;
    }

    [[nodiscard]] bool bounded() const { return kind != Kind::free; }
};

}  // namespace

// =============================================================================
// Damped least squares
// =============================================================================

LeastSquaresFit least_squares(const ResidualFn& fn, std::vector<double> initial,
                              std::vector<ParameterBound> bounds,
                              const LeastSquaresOptions& options) {
    const std::size_t n = initial.size();
    if (n == 0) {
        throw std::invalid_argument("least_squares: no parameters");
    }
    if (bounds.empty()) {
        bounds.assign(n, ParameterBound{});
    }
    if (bounds.size() != n) {
        throw std::invalid_argument("least_squares: bounds/parameter size mismatch");
    }

    std::vector<BoundTransform> transforms(n);
    for (std::size_t j = 0; j < n; ++j) {
        detail::require_finite(initial[j], "initial parameter");
        if (initial[j] < bounds[j].lower || initial[j] > bounds[j].upper) {
            throw std::invalid_argument("least_squares: initial parameter outside bounds");
        }
        transforms[j] = BoundTransform::from(bounds[j]);
        // Nudge parameters sitting exactly on a bound; the transform gradient
        // vanishes there.
        if (transforms[j].kind == BoundTransform::Kind::both) {
            const double margin = 1e-12 * (bounds[j].upper - bounds[j].lower);
            initial[j] = std::clamp(initial[j], bounds[j].lower + margin,
                                    bounds[j].upper - margin);
        } else if (initial[j] == bounds[j].lower || initial[j] == bounds[j].upper) {
            const double margin = 1e-12 * (std::abs(initial[j]) + 1.0);
            initial[j] += (initial[j] == bounds[j].lower) ? margin : -margin;
        }
    }

    std::vector<double> theta(n);
    for (std::size_t j = 0; j < n; ++j) {
        theta[j] = transforms[j].internal(initial[j]);
    }

    auto external = [&](const std::vector<double>& th) {
        std::vector<double> p(n);
        for (std::size_t j = 0; j < n; ++j) {
            p[j] = transforms[j].external(th[j]);
        }
        return p;
    };
    auto eval = [&](const std::vector<double>& th) { return fn(external(th)); };

    auto cost_of = [](const std::vector<double>& r) {
        double c = 0.0;
        for (double v : r) {
            c += v * v;
        }
        return c;
    };

    // Finite-difference step scale per internal parameter.
    std::vector<double> fd_scale(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (!transforms[j].bounded() && j < options.scales.size() && options.scales[j] > 0.0) {
            fd_scale[j] = options.scales[j];
        } else if (!transforms[j].bounded()) {
            fd_scale[j] = std::max(std::abs(theta[j]), 1.0);
        }
    }

    std::vector<double> residuals = eval(theta);
    const std::size_t m = residuals.size();
    if (m == 0) {
        throw std::invalid_argument("least_squares: empty residual vector");
    }
    double cost = cost_of(residuals);

    auto jacobian = [&](const std::vector<double>& th) {
        std::vector<std::vector<double>> cols(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double h = 6e-6 * std::max(std::abs(th[j]), fd_scale[j]);
            std::vector<double> tp = th;
            std::vector<double> tm = th;
            tp[j] += h;
            tm[j] -= h;
            const std::vector<double> rp = eval(tp);
            const std::vector<double> rm = eval(tm);
            cols[j].resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                cols[j][i] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        return cols;
    };

    LeastSquaresFit out;
    double damping = -1.0;
    bool converged = false;
    int iteration = 0;

    for (; iteration < options.max_iterations && !converged; ++iteration) {
        const auto cols = jacobian(theta);

        std::vector<double> jtj(n * n, 0.0);
        std::vector<double> grad(n, 0.0);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    s += cols[a][i] * cols[b][i];
                }
                jtj[a * n + b] = s;
                jtj[b * n + a] = s;
            }
            double g = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                g += cols[a][i] * residuals[i];
            }
            grad[a] = g;
        }
        out.condition_estimate = condition_estimate_from_diag(jtj, n);

        if (damping < 0.0) {
            double dmax = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                dmax = std::max(dmax, jtj[j * n + j]);
            }
            damping = dmax > 0.0 ? 1e-3 : 1.0;
        }

        bool accepted = false;
        while (!accepted) {
            std::vector<double> a = jtj;
            for (std::size_t j = 0; j < n; ++j) {
                // Marquardt scaling keeps the damping meaningful across
                // wildly different parameter magnitudes.
                a[j * n + j] += damping * std::max(jtj[j * n + j], 1e-30);
            }
            std::vector<double> step(n);
            for (std::size_t j = 0; j < n; ++j) {
                step[j] = -grad[j];
            }
            if (!cholesky(a, n)) {
                damping *= 10.0;
                if (damping > 1e14) {
                    std::ostringstream msg;
                    msg << "least_squares: singular normal equations (condition estimate "
                        << out.condition_estimate << ")";
                    throw FitError(msg.str());
                }
                continue;
            }
            cholesky_solve(a, n, step);

            std::vector<double> trial = theta;
            for (std::size_t j = 0; j < n; ++j) {
                trial[j] += step[j];
            }
            std::vector<double> trial_res = eval(trial);
            const double trial_cost = cost_of(trial_res);

            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                double step_norm = 0.0;
                double theta_norm = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    step_norm += step[j] * step[j];
                    theta_norm += theta[j] * theta[j];
                }
                const double rel_step =
                    std::sqrt(step_norm) / (std::sqrt(theta_norm) + 1e-300);
                const double rel_cost =
                    (cost - trial_cost) / std::max(cost, 1e-300);

                theta = std::move(trial);
                residuals = std::move(trial_res);
                cost = trial_cost;
                damping = std::max(damping / 3.0, 1e-14);
                accepted = true;
                if (rel_step < options.step_tolerance || rel_cost < options.cost_tolerance) {
                    converged = true;
                }
            } else {
                damping *= 10.0;
                if (damping > 1e14) {
                    // No downhill direction at essentially infinite damping;
                    // treat a vanishing gradient as a converged stationary
                    // point, anything else as a failure to converge.
                    double gmax = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        gmax = std::max(gmax, std::abs(grad[j]));
                    }
                    converged = gmax <= 1e-8 * (1.0 + cost);
                    accepted = true;  // leave the outer loop with the current iterate
                }
            }
        }
    }

    out.parameters = external(theta);
    out.residuals = residuals;
    out.cost = cost;
    out.iterations = iteration;
    out.converged = converged;

    // Gauss-Markov covariance from a finite-difference Jacobian in external
    // parameter space at the solution.
    std::vector<std::vector<double>> jext(n);
    {
        for (std::size_t j = 0; j < n; ++j) {
            double scale = (j < options.scales.size() && options.scales[j] > 0.0)
                               ? options.scales[j]
                               : std::max(std::abs(out.parameters[j]), 1.0);
            const double h = 6e-6 * std::max(std::abs(out.parameters[j]), scale);
            std::vector<double> pp = out.parameters;
            std::vector<double> pm = out.parameters;
            pp[j] += h;
            pm[j] -= h;
            const std::vector<double> rp = fn(pp);
            const std::vector<double> rm = fn(pm);
            jext[j].resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                jext[j][i] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
    }
    std::vector<double> jtj(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                s += jext[a][i] * jext[b][i];
            }
            jtj[a * n + b] = s;
            jtj[b * n + a] = s;
        }
    }
    const double dof = m > n ? static_cast<double>(m - n) : 1.0;
    const double variance = cost / dof;
    std::vector<double> inv;
    out.covariance.assign(n, std::vector<double>(n, 0.0));
    out.standard_errors.assign(n, 0.0);
    if (spd_inverse(jtj, n, inv)) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                out.covariance[a][b] = variance * inv[a * n + b];
            }
            out.standard_errors[a] =
                std::sqrt(std::max(out.covariance[a][a], 0.0));
        }
    } else {
        for (std::size_t a = 0; a < n; ++a) {
            out.standard_errors[a] = std::numeric_limits<double>::quiet_NaN();
        }
    }

    out.at_bound.assign(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        const double p = out.parameters[j];
        if (std::isfinite(bounds[j].lower) || std::isfinite(bounds[j].upper)) {
            const double span = std::isfinite(bounds[j].upper) && std::isfinite(bounds[j].lower)
                                    ? bounds[j].upper - bounds[j].lower
                                    : std::abs(p) + 1.0;
            const double tol = 1e-6 * span;
            if ((std::isfinite(bounds[j].lower) && p - bounds[j].lower <= tol) ||
                (std::isfinite(bounds[j].upper) && bounds[j].upper - p <= tol)) {
                out.at_bound[j] = true;
            }
        }
    }
    return out;
}

// =============================================================================
// Noise curves
// =============================================================================

void NoiseCurve::validate() const {
    detail::require_positive(frequency_hz, "frequency");
    if (setpoints.size() != outputs.size()) {
        throw std::invalid_argument("noise curve: setpoint/output size mismatch");
    }
    if (setpoints.size() < 2) {
        throw std::invalid_argument("noise curve: needs at least two points");
    }
    bool increasing = true;
    bool decreasing = true;
    for (std::size_t i = 0; i < setpoints.size(); ++i) {
        detail::require_finite(setpoints[i], "setpoint");
        detail::require_finite(outputs[i], "output");
        if (i > 0) {
            increasing = increasing && setpoints[i] > setpoints[i - 1];
            decreasing = decreasing && setpoints[i] < setpoints[i - 1];
        }
    }
    if (!increasing && !decreasing) {
        throw std::invalid_argument("noise curve: setpoints must be strictly monotone");
    }
    if (source_kind == SourceKind::vts) {
        for (double t : setpoints) {
            if (t < 0.0) {
                throw std::invalid_argument("noise curve: VTS temperatures must be >= 0");
            }
        }
    }
    detail::require_nonnegative(physical_temperature_k, "physical temperature");
}

NoiseCurve NoiseCurve::in_quanta() const {
    validate();
    if (output_unit == OutputUnit::quanta) {
        return *this;
    }
    NoiseCurve q = *this;
    const Frequency f(frequency_hz);
    for (double& y : q.outputs) {
        y = quanta_from_psd(y, f);
    }
    q.output_unit = OutputUnit::quanta;
    return q;
}

Quanta FitResult::system_added_noise() const {
    switch (kind) {
        case FitModelKind::single_input:
        case FitModelKind::ps_quadrature:
            return noise;
        case FitModelKind::two_input:
            return 0.5 + noise;
        case FitModelKind::two_input_saturated:
            return 0.5 + noise + n2_over_g1;
    }
    return noise;
}

// =============================================================================
// Source model evaluation
// =============================================================================

Quanta source_input_quanta(SourceKind kind, double setpoint, double electron_temperature_k,
                           Frequency f) {
    if (kind == SourceKind::vts) {
        return johnson_noise(setpoint, f);
    }
    return sntj_noise(setpoint, electron_temperature_k, f);
}

double sntj_model_value(double bias_v, double g, Quanta noise, double t_e, double v_offs,
                        Frequency f_signal, std::optional<Frequency> f_idler) {
    const double dv = bias_v - v_offs;
    double n = sntj_noise(dv, t_e, f_signal);
    if (f_idler) {
        n += sntj_noise(dv, t_e, *f_idler);
    }
    return g * (n + noise);
}

namespace {

// d/dt of x*coth(x) at t >= 0; series below 1e-4, saturates to 1 above 20.
double xcoth_prime_abs(double t) {
    if (t < 1e-4) {
        return 2.0 * t / 3.0 - 4.0 * t * t * t / 45.0;
    }
    if (t > 20.0) {
        return 1.0;
    }
    const double c = 1.0 / std::tanh(t);
    return c + t * (1.0 - c * c);
}

double xcoth_prime(double t) {
    return t >= 0.0 ? xcoth_prime_abs(t) : -xcoth_prime_abs(-t);
}

struct SntjPartials {
    double value = 0.0;   // quanta
    double d_bias = 0.0;  // per volt, w.r.t. the signed bias
    double d_t_e = 0.0;   // per kelvin
};

SntjPartials sntj_noise_partials(double bias_v, double t_e, Frequency f) {
    if (t_e <= 0.0) {
        throw std::invalid_argument("analytic SNTJ gradient requires T_e > 0");
    }
    const double hf = f.photon_energy();
    const double v = std::abs(bias_v);
    const double sign = bias_v >= 0.0 ? 1.0 : -1.0;
    const double kt2 = 2.0 * phys::boltzmann * t_e;
    const double ev = phys::electron_charge * v;
    const double up = (ev + hf) / kt2;
    const double um = (ev - hf) / kt2;
    const double c = kt2 / (4.0 * hf);

    SntjPartials out;
    out.value = c * (xcoth(up) + xcoth(um));
    const double dv_abs =
        c * (xcoth_prime(up) + xcoth_prime(um)) * (phys::electron_charge / kt2);
    out.d_bias = sign * dv_abs;
    // N = c(T) (xcoth(u+) + xcoth(u-)) with u ~ 1/T:
    // dN/dT = N/T - (c/T)(u+ xcoth'(u+) + u- xcoth'(u-)).
    out.d_t_e =
        out.value / t_e - (c / t_e) * (up * xcoth_prime(up) + um * xcoth_prime(um));
    return out;
}

}  // namespace

SntjModelGradient sntj_model_gradient(double bias_v, double g, Quanta noise, double t_e,
                                      double v_offs, Frequency f_signal,
                                      std::optional<Frequency> f_idler) {
    const double dv = bias_v - v_offs;
    SntjPartials s = sntj_noise_partials(dv, t_e, f_signal);
    double n = s.value;
    double d_bias = s.d_bias;
    double d_te = s.d_t_e;
    if (f_idler) {
        const SntjPartials si = sntj_noise_partials(dv, t_e, *f_idler);
        n += si.value;
        d_bias += si.d_bias;
        d_te += si.d_t_e;
    }
    SntjModelGradient out;
    out.d_g = n + noise;
    out.d_noise = g;
    out.d_t_e = g * d_te;
    out.d_v_offs = -g * d_bias;
    return out;
}

// =============================================================================
// Two-step fit
// =============================================================================

namespace {

double default_noise_guess(FitModelKind kind) {
    switch (kind) {
        case FitModelKind::single_input:
        case FitModelKind::ps_quadrature:
            return 50.0;  // HEMT-chain scale
        case FitModelKind::two_input:
        case FitModelKind::two_input_saturated:
            return 2.0;   // excess above the quantum limit
    }
    return 0.0;
}

bool two_mode(FitModelKind kind) {
    return kind == FitModelKind::two_input || kind == FitModelKind::two_input_saturated;
}

std::optional<Frequency> idler_frequency(const NoiseCurve& curve, const FitModel& model) {
    if (!two_mode(model.kind)) {
        return std::nullopt;
    }
    return Frequency(model.idler_frequency_hz.value_or(curve.frequency_hz));
}

double lag1_autocorrelation(const std::vector<double>& r) {
    if (r.size() < 3) {
        return 0.0;
    }
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = r[i] - mean;
        den += d * d;
        if (i + 1 < r.size()) {
            num += d * (r[i + 1] - mean);
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

struct BranchLine {
    double slope = 0.0;
    double intercept = 0.0;
};

BranchLine ols_line(const NoiseCurve& c, const std::vector<std::size_t>& idx) {
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    const double n = static_cast<double>(idx.size());
    for (std::size_t i : idx) {
        sx += c.setpoints[i];
        sy += c.outputs[i];
        sxx += c.setpoints[i] * c.setpoints[i];
        sxy += c.setpoints[i] * c.outputs[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) {
        throw FitError("degenerate asymptotic branch");
    }
    BranchLine out;
    out.slope = (n * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / n;
    return out;
}

// Fractional residuals over a point subset.
std::vector<double> fractional_residuals(const NoiseCurve& c,
                                         const std::vector<std::size_t>& idx,
                                         const std::function<double(double)>& model_at) {
    std::vector<double> r;
    r.reserve(idx.size());
    for (std::size_t i : idx) {
        const double data = c.outputs[i];
        if (data == 0.0) {
            throw FitError("fit: zero output sample");
        }
        r.push_back(model_at(c.setpoints[i]) / data - 1.0);
    }
    return r;
}

FitWindow make_window(const NoiseCurve& c, const std::vector<std::size_t>& idx,
                      double width_quanta) {
    FitWindow w;
    w.width_quanta = width_quanta;
    w.point_count = idx.size();
    if (!idx.empty()) {
        auto [lo, hi] = std::minmax_element(idx.begin(), idx.end(), [&](auto a, auto b) {
            return c.setpoints[a] < c.setpoints[b];
        });
        w.setpoint_min = c.setpoints[*lo];
        w.setpoint_max = c.setpoints[*hi];
    }
    return w;
}

double effective_t_e(const NoiseCurve& curve, const FitModel& model) {
    return model.fixed_t_e.value_or(curve.physical_temperature_k);
}

// Classical per-volt (or per-kelvin) slope of the summed source inputs.
double classical_slope(const NoiseCurve& curve, const FitModel& model) {
    const Frequency fs(curve.frequency_hz);
    const auto fi = idler_frequency(curve, model);
    if (curve.source_kind == SourceKind::sntj) {
        double c = phys::electron_charge / (2.0 * fs.photon_energy());
        if (fi) {
            c += phys::electron_charge / (2.0 * fi->photon_energy());
        }
        return c;
    }
    double c = phys::boltzmann / fs.photon_energy();
    if (fi) {
        c += phys::boltzmann / fi->photon_energy();
    }
    return c;
}

FitResult fit_full_on_subset(const NoiseCurve& q, const FitModel& model, const FitResult& seed,
                             const std::vector<std::size_t>& idx, double width_quanta);

}  // namespace

FitResult fit_asymptotes(const NoiseCurve& curve, const FitModel& model) {
    const NoiseCurve q = curve.in_quanta();
    const Frequency fs(q.frequency_hz);
    const auto fi = idler_frequency(q, model);
    const double t_e_guess = effective_t_e(q, model);
    const double slope_coeff = classical_slope(q, model);
    const double noise_guess = model.noise_guess.value_or(default_noise_guess(model.kind));

    FitResult result;
    result.kind = model.kind;
    result.source_kind = q.source_kind;
    result.frequency_hz = q.frequency_hz;
    result.t_e = t_e_guess;
    result.n2_over_g1 = model.fixed_n2_over_g1.value_or(0.0);

    if (q.source_kind == SourceKind::sntj) {
        double hf_max = fs.photon_energy();
        if (fi) {
            hf_max = std::max(hf_max, fi->photon_energy());
        }
        const double v_threshold =
            10.0 * std::max(hf_max, phys::boltzmann * t_e_guess) / phys::electron_charge;
        const double v0_guess = model.fixed_v_offs.value_or(0.0);

        std::vector<std::size_t> pos;
        std::vector<std::size_t> neg;
        std::vector<std::size_t> all;
        for (std::size_t i = 0; i < q.setpoints.size(); ++i) {
            const double dv = q.setpoints[i] - v0_guess;
            if (dv >= v_threshold) {
                pos.push_back(i);
                all.push_back(i);
            } else if (dv <= -v_threshold) {
                neg.push_back(i);
                all.push_back(i);
            }
        }
        if (pos.size() < 2 || neg.size() < 2) {
            throw FitError("fit_asymptotes: need at least two points in each asymptotic branch");
        }

        const BranchLine lp = ols_line(q, pos);
        const BranchLine ln = ols_line(q, neg);
        const double g_pos = lp.slope / slope_coeff;
        const double g_neg = -ln.slope / slope_coeff;
        if (g_pos <= 0.0 || g_neg <= 0.0) {
            throw FitError("fit_asymptotes: branch slopes have the wrong sign");
        }
        const double g_guess = 0.5 * (g_pos + g_neg);
        result.branch_inconsistent = std::abs(g_pos - g_neg) > 0.20 * g_guess;

        const bool fit_v0 = !model.fixed_v_offs.has_value();
        auto model_at = [&](std::span<const double> p) {
            const double g = p[0];
            const double n = p[1];
            const double v0 = fit_v0 ? p[2] : v0_guess;
            return fractional_residuals(q, all, [&](double v) {
                return g * (slope_coeff * std::abs(v - v0) + n);
            });
        };

        std::vector<double> seed_params{g_guess, noise_guess};
        std::vector<double> scales{g_guess, std::max(std::abs(noise_guess), 1.0)};
        if (fit_v0) {
            seed_params.push_back(0.0);  // the AWG offset is expected near zero
            scales.push_back(v_threshold);
        }
        LeastSquaresOptions opts;
        opts.scales = scales;
        const LeastSquaresFit fit = least_squares(model_at, seed_params, {}, opts);
        if (!fit.converged) {
            throw FitError("fit_asymptotes: regression did not converge");
        }

        result.g_sys = fit.parameters[0];
        result.noise = fit.parameters[1];
        result.v_offs = fit_v0 ? fit.parameters[2] : v0_guess;
        result.g_sys_err = fit.standard_errors[0];
        result.noise_err = fit.standard_errors[1];
        result.v_offs_err = fit_v0 ? fit.standard_errors[2] : 0.0;
        result.residuals = fit.residuals;
        result.iterations = fit.iterations;
        result.converged = fit.converged;
        result.window = make_window(q, all, std::numeric_limits<double>::infinity());
        result.residual_lag1_autocorr = lag1_autocorrelation(fit.residuals);
        return result;
    }

    // VTS: a single classical branch at k_B T >= 10 h f.
    double hf_max = fs.photon_energy();
    if (fi) {
        hf_max = std::max(hf_max, fi->photon_energy());
    }
    const double t_threshold = 10.0 * hf_max / phys::boltzmann;
    std::vector<std::size_t> hot;
    for (std::size_t i = 0; i < q.setpoints.size(); ++i) {
        if (q.setpoints[i] >= t_threshold) {
            hot.push_back(i);
        }
    }
    if (hot.size() < 2) {
        throw FitError("fit_asymptotes: need at least two classical-regime points");
    }
    const BranchLine line = ols_line(q, hot);
    const double g_guess = line.slope / slope_coeff;
    if (g_guess <= 0.0) {
        throw FitError("fit_asymptotes: branch slope has the wrong sign");
    }

    auto model_at = [&](std::span<const double> p) {
        const double g = p[0];
        const double n = p[1];
        return fractional_residuals(q, hot,
                                    [&](double t) { return g * (slope_coeff * t + n); });
    };
    LeastSquaresOptions opts;
    opts.scales = {g_guess, std::max(std::abs(noise_guess), 1.0)};
    const LeastSquaresFit fit =
        least_squares(model_at, {g_guess, noise_guess}, {}, opts);
    if (!fit.converged) {
        throw FitError("fit_asymptotes: regression did not converge");
    }
    result.g_sys = fit.parameters[0];
    result.noise = fit.parameters[1];
    result.v_offs = 0.0;
    result.g_sys_err = fit.standard_errors[0];
    result.noise_err = fit.standard_errors[1];
    result.residuals = fit.residuals;
    result.iterations = fit.iterations;
    result.converged = fit.converged;
    result.window = make_window(q, hot, std::numeric_limits<double>::infinity());
    result.residual_lag1_autocorr = lag1_autocorrelation(fit.residuals);
    return result;
}

namespace {

FitResult fit_full_on_subset(const NoiseCurve& q, const FitModel& model, const FitResult& seed,
                             const std::vector<std::size_t>& idx, double width_quanta) {
    const Frequency fs(q.frequency_hz);
    const auto fi = idler_frequency(q, model);
    const double v0 = model.fixed_v_offs.value_or(seed.v_offs);

    FitResult result;
    result.kind = model.kind;
    result.source_kind = q.source_kind;
    result.frequency_hz = q.frequency_hz;
    result.v_offs = v0;
    result.n2_over_g1 = model.fixed_n2_over_g1.value_or(0.0);

    auto noise_bound = [&](double n_seed) {
        if (std::abs(n_seed) < 1e-9) {
            return ParameterBound{-0.5, 0.5};
        }
        const double a = 0.5 * n_seed;
        const double b = 1.5 * n_seed;
        return ParameterBound{std::min(a, b), std::max(a, b)};
    };

    if (model.kind == FitModelKind::two_input_saturated) {
        if (model.lambda == nullptr || !model.fixed_n2_over_g1) {
            throw FitError("saturated fit requires a compression curve and a fixed N~2/G~1 term");
        }
        const CompressionCurve& lam = *model.lambda;
        const double t_e = effective_t_e(q, model);
        const double ft = *model.fixed_n2_over_g1;

        // The corrected model G (N_s + N_i + ft/lambda + N) is linear in
        // (G, G N) once V_offs and T_e are fixed: a weighted linear solve
        // seeds the engine, which polishes and produces the covariance.
        std::vector<double> regressor(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double v = q.setpoints[idx[k]];
            const double dv = v - v0;
            double s = sntj_noise(dv, t_e, fs);
            if (fi) {
                s += sntj_noise(dv, t_e, *fi);
            }
            regressor[k] = s + ft / lam.lambda(v);
        }
        double sxx = 0.0;
        double sx1 = 0.0;
        double s11 = 0.0;
        double sxy = 0.0;
        double s1y = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double y = q.outputs[idx[k]];
            const double w = 1.0 / (y * y);
            sxx += w * regressor[k] * regressor[k];
            sx1 += w * regressor[k];
            s11 += w;
            sxy += w * regressor[k] * y;
            s1y += w * y;
        }
        const double det = sxx * s11 - sx1 * sx1;
        if (det <= 0.0) {
            throw FitError("saturated fit: degenerate design matrix");
        }
        const double g_lin = (sxy * s11 - sx1 * s1y) / det;
        const double b_lin = (sxx * s1y - sx1 * sxy) / det;
        if (g_lin <= 0.0) {
            throw FitError("saturated fit: non-positive gain");
        }
        const double n_lin = b_lin / g_lin;

        auto residual_fn = [&](std::span<const double> p) {
            const double g = p[0];
            const double n = p[1];
            std::vector<double> r(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k) {
                r[k] = g * (regressor[k] + n) / q.outputs[idx[k]] - 1.0;
            }
            return r;
        };
        LeastSquaresOptions opts;
        opts.scales = {g_lin, std::max(std::abs(n_lin), 1.0)};
        const LeastSquaresFit fit = least_squares(residual_fn, {g_lin, n_lin}, {}, opts);

        result.g_sys = fit.parameters[0];
        result.noise = fit.parameters[1];
        result.t_e = t_e;
        result.g_sys_err = fit.standard_errors[0];
        result.noise_err = fit.standard_errors[1];
        result.residuals = fit.residuals;
        result.iterations = fit.iterations;
        result.converged = fit.converged;
        result.window = make_window(q, idx, width_quanta);
        result.residual_lag1_autocorr = lag1_autocorrelation(fit.residuals);
        return result;
    }

    if (q.source_kind == SourceKind::sntj) {
        const bool t_e_free = !model.fixed_t_e.has_value();
        const double t_e_seed =
            std::max(model.fixed_t_e.value_or(q.physical_temperature_k), 1e-3);

        auto residual_fn = [&](std::span<const double> p) {
            const double g = p[0];
            const double n = p[1];
            const double t_e = t_e_free ? p[2] : t_e_seed;
            return fractional_residuals(q, idx, [&](double v) {
                return sntj_model_value(v, g, n, t_e, v0, fs, fi);
            });
        };

        std::vector<double> seeds{seed.g_sys, seed.noise};
        std::vector<ParameterBound> bounds{
            ParameterBound{0.5 * seed.g_sys, 1.5 * seed.g_sys}, noise_bound(seed.noise)};
        LeastSquaresOptions opts;
        opts.scales = {seed.g_sys, std::max(std::abs(seed.noise), 1.0)};
        if (t_e_free) {
            seeds.push_back(t_e_seed);
            bounds.push_back(ParameterBound{0.0, std::numeric_limits<double>::infinity()});
            opts.scales.push_back(std::max(t_e_seed, 1e-2));
        }
        const LeastSquaresFit fit = least_squares(residual_fn, seeds, bounds, opts);

        result.g_sys = fit.parameters[0];
        result.noise = fit.parameters[1];
        result.t_e = t_e_free ? fit.parameters[2] : t_e_seed;
        result.g_sys_err = fit.standard_errors[0];
        result.noise_err = fit.standard_errors[1];
        result.t_e_err = t_e_free ? fit.standard_errors[2] : 0.0;
        result.residuals = fit.residuals;
        result.iterations = fit.iterations;
        result.converged = fit.converged;
        result.bound_active =
            std::any_of(fit.at_bound.begin(), fit.at_bound.end(), [](bool b) { return b; });
        result.window = make_window(q, idx, width_quanta);
        result.residual_lag1_autocorr = lag1_autocorrelation(fit.residuals);
        return result;
    }

    // VTS: the source law is exact Johnson noise; no offset, no T_e.
    auto residual_fn = [&](std::span<const double> p) {
        const double g = p[0];
        const double n = p[1];
        return fractional_residuals(q, idx, [&](double t) {
            double s = johnson_noise(t, fs);
            if (fi) {
                s += johnson_noise(t, *fi);
            }
            return g * (s + n);
        });
    };
    const std::vector<ParameterBound> bounds{
        ParameterBound{0.5 * seed.g_sys, 1.5 * seed.g_sys}, noise_bound(seed.noise)};
    LeastSquaresOptions opts;
    opts.scales = {seed.g_sys, std::max(std::abs(seed.noise), 1.0)};
    const LeastSquaresFit fit =
        least_squares(residual_fn, {seed.g_sys, seed.noise}, bounds, opts);

    result.g_sys = fit.parameters[0];
    result.noise = fit.parameters[1];
    result.t_e = 0.0;
    result.g_sys_err = fit.standard_errors[0];
    result.noise_err = fit.standard_errors[1];
    result.residuals = fit.residuals;
    result.iterations = fit.iterations;
    result.converged = fit.converged;
    result.bound_active =
        std::any_of(fit.at_bound.begin(), fit.at_bound.end(), [](bool b) { return b; });
    result.window = make_window(q, idx, width_quanta);
    result.residual_lag1_autocorr = lag1_autocorrelation(fit.residuals);
    return result;
}

}  // namespace

FitResult fit_full(const NoiseCurve& curve, const FitModel& model, const FitResult& seed) {
    const NoiseCurve q = curve.in_quanta();
    std::vector<std::size_t> idx(q.setpoints.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return fit_full_on_subset(q, model, seed, idx,
                              std::numeric_limits<double>::infinity());
}

FitResult fit_saturation_corrected(const NoiseCurve& curve, const CompressionCurve& lambda_curve,
                                   Quanta n2_tilde, double g1_small_signal, FitModel model) {
    detail::require_nonnegative(n2_tilde, "second-stage noise");
    detail::require_positive(g1_small_signal, "small-signal gain");
    NoiseCurve q = curve.in_quanta();
    for (double v : q.setpoints) {
        if (!lambda_curve.covers(v)) {
            throw FitError("fit_saturation_corrected: compression curve does not cover the bias range");
        }
        if (lambda_curve.lambda(v) <= 0.0) {
            throw FitError("fit_saturation_corrected: lambda must be > 0");
        }
    }

    model.kind = FitModelKind::two_input_saturated;
    model.lambda = &lambda_curve;
    model.fixed_n2_over_g1 = n2_tilde / g1_small_signal;

    // Correct the outputs point-wise, then seed the bias offset from the
    // corrected asymptotes.
    NoiseCurve corrected = q;
    for (std::size_t i = 0; i < corrected.setpoints.size(); ++i) {
        corrected.outputs[i] /= lambda_curve.lambda(corrected.setpoints[i]);
    }
    FitModel seed_model = model;
    seed_model.kind = FitModelKind::two_input;
    const FitResult seed = fit_asymptotes(corrected, seed_model);

    FitModel full_model = model;
    full_model.fixed_v_offs = model.fixed_v_offs.value_or(seed.v_offs);
    std::vector<std::size_t> idx(corrected.setpoints.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return fit_full_on_subset(corrected, full_model, seed, idx,
                              std::numeric_limits<double>::infinity());
}

std::vector<FitResult> fit_window_sweep(const NoiseCurve& curve, const FitModel& model,
                                        std::span<const double> widths_quanta) {
    if (widths_quanta.empty()) {
        throw std::invalid_argument("fit_window_sweep: no widths");
    }
    for (std::size_t i = 1; i < widths_quanta.size(); ++i) {
        if (widths_quanta[i] <= widths_quanta[i - 1]) {
            throw std::invalid_argument("fit_window_sweep: widths must be sorted ascending");
        }
    }
    NoiseCurve q = curve.in_quanta();
    const Frequency fs(q.frequency_hz);
    const double t_e = effective_t_e(q, model);

    // Saturated sweeps fit the corrected outputs; the bias offset and the
    // fixed term come from the model, seeded once from the corrected curve.
    FitModel local = model;
    FitResult seed;
    if (model.kind == FitModelKind::two_input_saturated) {
        if (model.lambda == nullptr || !model.fixed_n2_over_g1) {
            throw FitError("saturated sweep requires a compression curve and a fixed N~2/G~1 term");
        }
        for (std::size_t i = 0; i < q.setpoints.size(); ++i) {
            if (!model.lambda->covers(q.setpoints[i])) {
                throw FitError("fit_window_sweep: compression curve does not cover the bias range");
            }
            q.outputs[i] /= model.lambda->lambda(q.setpoints[i]);
        }
        FitModel seed_model = local;
        seed_model.kind = FitModelKind::two_input;
        seed = fit_asymptotes(q, seed_model);
        local.fixed_v_offs = model.fixed_v_offs.value_or(seed.v_offs);
    } else {
        seed = fit_asymptotes(q, local);
        local.fixed_v_offs = model.fixed_v_offs.value_or(seed.v_offs);
    }
    const double v0 = *local.fixed_v_offs;

    std::vector<FitResult> results;
    results.reserve(widths_quanta.size());
    for (double width : widths_quanta) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < q.setpoints.size(); ++i) {
            const double setpoint = q.setpoints[i];
            const double offset_setpoint =
                q.source_kind == SourceKind::sntj ? setpoint - v0 : setpoint;
            if (source_input_quanta(q.source_kind, offset_setpoint, t_e, fs) <= width) {
                idx.push_back(i);
            }
        }
        if (idx.size() < 6) {
            throw FitError("fit_window_sweep: window too narrow (needs >= 6 points)");
        }
        const FitResult& window_seed = results.empty() ? seed : results.back();
        results.push_back(fit_full_on_subset(q, local, window_seed, idx, width));
    }
    return results;
}

}  // namespace noisecal
