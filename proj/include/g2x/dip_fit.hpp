#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "g2x/correlator.hpp"

namespace g2x {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Result of fitting g(tau) = 1 - A exp(-|tau|/tau_c) to a correlation
/// histogram. The zero-delay correlation is 1 - amplitude. A flat histogram is
/// a valid fit (amplitude compatible with zero), not an error.
struct DipFit {
    double amplitude = 0.0;
    double tau_c = 0.0;
    double sigma_amplitude = 0.0;
    double sigma_tau = 0.0;
    std::array<std::array<double, 2>, 2> covariance{}; ///< over (amplitude, tau_c)
    double chi2_reduced = 0.0;
    double window = 0.0; ///< half-extent of the fitted data (s)
    std::vector<std::pair<double, double>> excluded;
    std::size_t n_points = 0;
};

struct FitOptions {
    int grid_points = 200;  ///< log-spaced tau_c candidates for the linear scan
    int max_iterations = 200;
};

namespace detail {

struct FitData {
    std::vector<double> tau;
    std::vector<double> y;      // 1 - g
    std::vector<double> weight; // 1/sigma^2
};

inline FitData select_fit_data(const CorrelationHistogram& h,
                               const std::vector<std::pair<double, double>>& exclude) {
    FitData d;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double tau = h.centers[k];
        bool dropped = false;
        for (const auto& [lo, hi] : exclude) {
            if (tau >= lo && tau <= hi) {
                dropped = true;
                break;
            }
        }
        if (dropped) continue;
        if (!(h.sigma[k] > 0.0)) throw FitError("fit_dip: non-positive bin uncertainty");
        d.tau.push_back(tau);
        d.y.push_back(1.0 - h.g[k]);
        d.weight.push_back(1.0 / (h.sigma[k] * h.sigma[k]));
    }
    return d;
}

// weighted linear solve for the amplitude at fixed tau_c; returns {A, chi2}
inline std::pair<double, double> amplitude_at(const FitData& d, double tau_c) {
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < d.tau.size(); ++i) {
        const double x = std::exp(-std::abs(d.tau[i]) / tau_c);
        sxx += d.weight[i] * x * x;
        sxy += d.weight[i] * x * d.y[i];
        syy += d.weight[i] * d.y[i] * d.y[i];
    }
    if (!(sxx > 0.0)) return {0.0, syy};
    const double a = sxy / sxx;
    return {a, syy - a * sxy};
}

} // namespace detail

/// Weighted least-squares fit of the two-sided exponential dip. A log-spaced
/// scan over tau_c (the amplitude has a closed-form solution at each point)
/// seeds a damped Gauss-Newton refinement of (A, tau_c); parameter errors come
/// from the inverse normal matrix scaled by the reduced chi-square.
inline DipFit fit_dip(const CorrelationHistogram& h,
                      const std::vector<std::pair<double, double>>& exclude = {},
                      const FitOptions& options = {}) {
    detail::FitData data = detail::select_fit_data(h, exclude);
    const std::size_t n = data.tau.size();
    if (n < 20) throw FitError("fit_dip: fewer than 20 usable bins in the fit window");

    const double tau_lo = 2.0 * h.bin_width;
    const double tau_hi = h.half_window;
    if (!(tau_hi > tau_lo)) throw FitError("fit_dip: degenerate fit window");

    // stage 1: separable grid scan
    double best_tau = tau_lo;
    double best_amp = 0.0;
    double best_chi2 = std::numeric_limits<double>::infinity();
    const int grid_n = std::max(2, options.grid_points);
    const double log_lo = std::log(tau_lo);
    const double log_hi = std::log(tau_hi);
    for (int i = 0; i < grid_n; ++i) {
        const double tau = std::exp(log_lo + (log_hi - log_lo) * i / (grid_n - 1));
        const auto [a, chi2] = detail::amplitude_at(data, tau);
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best_tau = tau;
            best_amp = a;
        }
    }

    const auto normal_matrix = [&](double a, double tau, double& jaa, double& jat, double& jtt,
                                   double& ga, double& gt, double& chi2) {
        jaa = jat = jtt = ga = gt = chi2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double at = std::abs(data.tau[i]);
            const double x = std::exp(-at / tau);
            const double r = data.y[i] - a * x; // residual of y = A x
            const double da = x;                // d(A x)/dA
            const double dt = a * x * at / (tau * tau);
            jaa += data.weight[i] * da * da;
            jat += data.weight[i] * da * dt;
            jtt += data.weight[i] * dt * dt;
            ga += data.weight[i] * da * r;
            gt += data.weight[i] * dt * r;
            chi2 += data.weight[i] * r * r;
        }
    };

    // stage 2: damped Gauss-Newton refinement, tau_c constrained to the
    // identifiable domain [bin width, window]
    double amp = best_amp;
    double tau = best_tau;
    bool converged = false;
    int stalled = 0;
    double jaa, jat, jtt, ga, gt, chi2;
    normal_matrix(amp, tau, jaa, jat, jtt, ga, gt, chi2);
    for (int it = 0; it < options.max_iterations && !converged; ++it) {
        const double det = jaa * jtt - jat * jat;
        if (!(std::abs(det) > 0.0)) break;
        double step_a = (jtt * ga - jat * gt) / det;
        double step_t = (jaa * gt - jat * ga) / det;
        double new_chi2 = 0.0;
        double naa = 0.0, nat = 0.0, ntt = 0.0, nga = 0.0, ngt = 0.0;
        double used_a = 0.0, used_t = 0.0;
        int halvings = 0;
        for (; halvings < 30; ++halvings) {
            const double ta = amp + step_a;
            const double tt = std::clamp(tau + step_t, h.bin_width, h.half_window);
            normal_matrix(ta, tt, naa, nat, ntt, nga, ngt, new_chi2);
            if (new_chi2 <= chi2 * (1.0 + 1e-14)) {
                used_a = ta - amp;
                used_t = tt - tau;
                break;
            }
            step_a *= 0.5;
            step_t *= 0.5;
        }
        if (halvings == 30) break;
        amp += used_a;
        tau += used_t;
        jaa = naa;
        jat = nat;
        jtt = ntt;
        ga = nga;
        gt = ngt;
        // a plateauing objective counts as converged: shallow-dip data leaves
        // tau_c weakly constrained and the step never shrinks along the valley
        if (chi2 - new_chi2 <= 1e-12 * (chi2 + 1.0)) {
            if (++stalled >= 2) converged = true;
        } else {
            stalled = 0;
        }
        chi2 = new_chi2;
        if (std::abs(used_a) <= 1e-12 + 1e-9 * std::abs(amp) &&
            std::abs(used_t) <= 1e-15 + 1e-9 * tau)
            converged = true;
    }

    const double dof = static_cast<double>(n > 2 ? n - 2 : 1);
    if (!converged) {
        // flat data leaves tau_c unconstrained; fall back to the grid optimum
        // when the amplitude is compatible with zero, otherwise report failure
        const auto [ga2, gchi2] = detail::amplitude_at(data, best_tau);
        double sxx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = std::exp(-std::abs(data.tau[i]) / best_tau);
            sxx += data.weight[i] * x * x;
        }
        const double sigma_a = std::sqrt(std::max(gchi2 / dof, 0.0) / sxx);
        if (std::abs(ga2) <= 3.0 * sigma_a + 1e-12) {
            DipFit fit;
            fit.amplitude = ga2;
            fit.tau_c = best_tau;
            fit.sigma_amplitude = sigma_a;
            fit.sigma_tau = h.half_window; // unconstrained
            fit.covariance[0][0] = sigma_a * sigma_a;
            fit.covariance[1][1] = fit.sigma_tau * fit.sigma_tau;
            fit.chi2_reduced = gchi2 / dof;
            fit.window = h.half_window;
            fit.excluded = exclude;
            fit.n_points = n;
            return fit;
        }
        throw FitError("fit_dip: Gauss-Newton did not converge");
    }

    normal_matrix(amp, tau, jaa, jat, jtt, ga, gt, chi2);
    const double det = jaa * jtt - jat * jat;
    if (!(det > 0.0)) throw FitError("fit_dip: singular normal matrix at the optimum");
    const double chi2_red = chi2 / dof;
    const double scale = std::max(chi2_red, 0.0);

    DipFit fit;
    fit.amplitude = amp;
    fit.tau_c = tau;
    fit.covariance[0][0] = jtt / det * scale;
    fit.covariance[0][1] = fit.covariance[1][0] = -jat / det * scale;
    fit.covariance[1][1] = jaa / det * scale;
    fit.sigma_amplitude = std::sqrt(std::max(fit.covariance[0][0], 0.0));
    fit.sigma_tau = std::sqrt(std::max(fit.covariance[1][1], 0.0));
    fit.chi2_reduced = chi2_red;
    fit.window = h.half_window;
    fit.excluded = exclude;
    fit.n_points = n;
    return fit;
}

/// Fit with automatic masking of the residual-bunching peaks at +-delta:
/// a first pass with a coarse mask estimates tau_c, the final pass excludes
/// |tau -+ delta| < 5 tau_c (clamped to keep data on both sides).
inline DipFit fit_dip_auto(const CorrelationHistogram& h, double delta,
                           const FitOptions& options = {}) {
    if (!(delta > 0.0)) return fit_dip(h, {}, options);
    const auto mask = [&](double half) {
        std::vector<std::pair<double, double>> ex;
        ex.emplace_back(delta - half, delta + half);
        ex.emplace_back(-delta - half, -delta + half);
        return ex;
    };
    const DipFit first = fit_dip(h, mask(delta / 3.0), options);
    double half = 5.0 * first.tau_c;
    half = std::min(half, delta / 2.0);
    half = std::max(half, 10.0 * h.bin_width);
    return fit_dip(h, mask(half), options);
}

} // namespace g2x
