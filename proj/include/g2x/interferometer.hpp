#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

#include "g2x/field.hpp"

namespace g2x {

/// Asymmetric Mach-Zehnder interferometer: path delay, recombiner splitting
/// ratio and fringe visibility.
struct InterferometerConfig {
    double delay = 900e-9;
    double splitting_ratio = 0.5;
    double visibility = 1.0;
};

inline void validate(const InterferometerConfig& cfg) {
    if (!(cfg.delay > 0.0)) throw std::invalid_argument("interferometer: delay must be positive");
    if (!(cfg.splitting_ratio > 0.0 && cfg.splitting_ratio < 1.0))
        throw std::invalid_argument("interferometer: splitting ratio must lie in (0,1)");
    if (!(cfg.visibility >= 0.0 && cfg.visibility <= 1.0))
        throw std::invalid_argument("interferometer: visibility must lie in [0,1]");
}

/// Interfere a field with its delayed copy:
///   E_A(t) = sqrt(s) E(t) + V sqrt(1-s) E(t+Delta)
///   E_B(t) = sqrt(1-s) E(t) - V sqrt(s) E(t+Delta)
/// over the overlap window (the delayed output port picks up the pi shift).
/// At s = 1/2, V = 1 this is the balanced splitter with
/// |E_A|^2 + |E_B|^2 = |E(t)|^2 + |E(t+Delta)|^2 pointwise.
/// The delay snaps to the nearest sample; result trajectories have
/// length N - round(Delta/dt).
inline std::pair<FieldTrajectory, FieldTrajectory> mzi_transform(const FieldTrajectory& input,
                                                                 const InterferometerConfig& cfg) {
    validate(cfg);
    if (!(input.dt > 0.0) || input.samples.size() < 2)
        throw std::invalid_argument("mzi_transform: invalid input trajectory");
    const auto d = static_cast<std::size_t>(std::llround(cfg.delay / input.dt));
    if (d < 1 || d >= input.samples.size())
        throw std::invalid_argument("mzi_transform: trajectory shorter than the interferometer delay");
    if (std::abs(cfg.delay - static_cast<double>(d) * input.dt) > 0.5 * input.dt * (1.0 + 1e-9))
        throw std::invalid_argument("mzi_transform: delay not representable on the sample grid");

    const double ca = std::sqrt(cfg.splitting_ratio);
    const double cb = std::sqrt(1.0 - cfg.splitting_ratio);
    const double v = cfg.visibility;
    const std::size_t n = input.samples.size() - d;

    FieldTrajectory a;
    FieldTrajectory b;
    a.dt = b.dt = input.dt;
    a.start_time = b.start_time = input.start_time;
    a.seed = b.seed = input.seed;
    a.samples.resize(n);
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> e0 = input.samples[i];
        const std::complex<double> e1 = input.samples[i + d];
        a.samples[i] = ca * e0 + v * cb * e1;
        b.samples[i] = cb * e0 - v * ca * e1;
    }
    return {std::move(a), std::move(b)};
}

} // namespace g2x
