#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <variant>
#include <vector>

#include "g2x/field.hpp"

namespace g2x {

/// First-order field correlation of a primitive model: exp(-|tau|/tau_c) for
/// both constant-modulus and chaotic sources (Lorentzian line shape).
/// Composite models are rejected; their correlations are assembled by
/// analytic_g2x_curve from the component functions.
inline std::complex<double> analytic_g1(const FieldModel& model, double tau) {
    return std::visit(
        [&](const auto& m) -> std::complex<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, Chaotic>) {
                return {std::exp(-std::abs(tau) / m.tau_c), 0.0};
            } else {
                throw std::invalid_argument("analytic_g1: composite models are not primitive");
            }
        },
        model.v);
}

/// Zero-delay interferometric correlation of a two-component mixture:
/// 2 rho - (3/2) rho^2 + ((1-rho)^2 / 2) g2_unc_0.
inline double analytic_g2x_mixture_zero(double rho, double g2_unc_0) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("analytic_g2x_mixture_zero: rho must lie in [0,1]");
    if (!(g2_unc_0 >= 0.0))
        throw std::invalid_argument("analytic_g2x_mixture_zero: g2_unc_0 must be non-negative");
    return 2.0 * rho - 1.5 * rho * rho + 0.5 * (1.0 - rho) * (1.0 - rho) * g2_unc_0;
}

namespace detail {

// Normalised field/intensity correlation kernels, assembled recursively over a
// model tree. g1 carries detuning phases as complex rotation; for every model
// in this family the interference kernel of the cross terms equals |g1|^2.
struct CorrelationKernel {
    // first-order correlation at lag tau
    std::complex<double> g1(const FieldModel& model, double tau) const {
        return std::visit(
            [&](const auto& m) -> std::complex<double> {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, Chaotic>) {
                    return {std::exp(-std::abs(tau) / m.tau_c), 0.0};
                } else if constexpr (std::is_same_v<T, Mixture>) {
                    return m.rho * g1(*m.coherent_part, tau) +
                           (1.0 - m.rho) * g1(*m.uncorrelated_part, tau);
                } else {
                    const double angle = 6.283185307179586476925286766559 * m.detuning * tau;
                    const std::complex<double> rot(std::cos(angle), std::sin(angle));
                    return m.r_alpha * std::exp(-std::abs(tau) / m.tau_alpha) +
                           m.r_beta * std::exp(-std::abs(tau) / m.tau_beta) * rot;
                }
            },
            model.v);
    }

    // conventional intensity correlation at lag tau
    double g2(const FieldModel& model, double tau) const {
        return std::visit(
            [&](const auto& m) -> double {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, Coherent>) {
                    return 1.0;
                } else if constexpr (std::is_same_v<T, Chaotic>) {
                    const double u = std::exp(-std::abs(tau) / m.tau_c);
                    return 1.0 + u * u; // Siegert relation
                } else if constexpr (std::is_same_v<T, Mixture>) {
                    const double rho = m.rho;
                    const double cross =
                        (g1(*m.coherent_part, tau) * std::conj(g1(*m.uncorrelated_part, tau))).real();
                    return rho * rho * g2(*m.coherent_part, tau) +
                           (1.0 - rho) * (1.0 - rho) * g2(*m.uncorrelated_part, tau) +
                           2.0 * rho * (1.0 - rho) * (1.0 + cross);
                } else {
                    const double angle = 6.283185307179586476925286766559 * m.detuning * tau;
                    const double cross = std::exp(-std::abs(tau) / m.tau_alpha) *
                                         std::exp(-std::abs(tau) / m.tau_beta) * std::cos(angle);
                    return m.r_alpha * m.r_alpha + m.r_beta * m.r_beta +
                           2.0 * m.r_alpha * m.r_beta * (1.0 + cross);
                }
            },
            model.v);
    }
};

} // namespace detail

/// Cross-port correlation curve behind a delay-Delta interferometer, from the
/// six-term expansion of the output-field correlator with the component
/// correlation functions inserted and with field correlations across the full
/// delay dropped (valid for Delta well beyond every coherence time):
///
///   g2x(tau) = 1/4 [ 2 g2(tau) + g2(tau - Delta) + g2(tau + Delta) ] - 1/2 |g1(tau)|^2
inline std::vector<double> analytic_g2x_curve(const FieldModel& model,
                                              const std::vector<double>& tau_grid, double delta) {
    validate(model);
    if (!(delta > 10.0 * max_coherence_time(model)))
        throw std::invalid_argument(
            "analytic_g2x_curve: delay must exceed 10x the largest coherence time");
    detail::CorrelationKernel k;
    std::vector<double> out;
    out.reserve(tau_grid.size());
    for (const double tau : tau_grid) {
        const double bunching =
            2.0 * k.g2(model, tau) + k.g2(model, tau - delta) + k.g2(model, tau + delta);
        const double dip = std::norm(k.g1(model, tau));
        out.push_back(0.25 * bunching - 0.5 * dip);
    }
    return out;
}

} // namespace g2x
