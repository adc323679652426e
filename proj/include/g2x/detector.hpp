#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "g2x/field.hpp"
#include "g2x/random.hpp"

namespace g2x {

/// Single-photon detector: quantum efficiency, timestamp quantisation,
/// non-paralysable dead time and uniform dark counts.
struct DetectorConfig {
    double efficiency = 1.0;
    double resolution = 2e-9;
    double dead_time = 0.0;
    double dark_rate = 0.0;
    std::uint64_t seed = 0;
};

inline void validate(const DetectorConfig& cfg) {
    if (!(cfg.efficiency > 0.0 && cfg.efficiency <= 1.0))
        throw std::invalid_argument("detector: efficiency must lie in (0,1]");
    if (!(cfg.resolution > 0.0)) throw std::invalid_argument("detector: resolution must be positive");
    if (!(cfg.dead_time >= 0.0)) throw std::invalid_argument("detector: dead time must be non-negative");
    if (!(cfg.dark_rate >= 0.0)) throw std::invalid_argument("detector: dark rate must be non-negative");
}

/// Photodetection record of one channel: event times as integer multiples of
/// the timestamp resolution, sorted non-decreasing.
struct TimestampStream {
    char channel = 'A';
    std::uint64_t resolution_ps = 2000; ///< timestamp resolution (picoseconds)
    std::uint64_t duration_ps = 0;      ///< integration time (picoseconds)
    std::vector<std::uint64_t> ticks;   ///< event times in resolution units

    double resolution_s() const { return static_cast<double>(resolution_ps) * 1e-12; }
    double duration_s() const { return static_cast<double>(duration_ps) * 1e-12; }
    double rate() const {
        return duration_ps == 0 ? 0.0 : static_cast<double>(ticks.size()) / duration_s();
    }
};

namespace detail {

// Maps a sample index to a timestamp tick; uses integer arithmetic whenever
// dt and the resolution are commensurate so quantisation is exact.
class TickMapper {
public:
    TickMapper(double dt, double resolution) : dt_(dt), resolution_(resolution) {
        const double q = resolution / dt;
        const double m = dt / resolution;
        if (std::abs(q - std::llround(q)) < 1e-9 * q && std::llround(q) >= 1) {
            samples_per_tick_ = static_cast<std::uint64_t>(std::llround(q));
        } else if (std::abs(m - std::llround(m)) < 1e-9 * m && std::llround(m) >= 1) {
            ticks_per_sample_ = static_cast<std::uint64_t>(std::llround(m));
        }
    }

    std::uint64_t tick(std::uint64_t sample_index) const {
        if (samples_per_tick_) return sample_index / samples_per_tick_;
        if (ticks_per_sample_) return sample_index * ticks_per_sample_;
        return static_cast<std::uint64_t>(
            std::floor(static_cast<double>(sample_index) * dt_ / resolution_ + 1e-12));
    }

private:
    double dt_;
    double resolution_;
    std::uint64_t samples_per_tick_ = 0;
    std::uint64_t ticks_per_sample_ = 0;
};

// Per-sample Bernoulli thinning of the instantaneous rate, one uniform draw
// per sample regardless of acceptance so event streams are reproducible.
class DetectionSampler {
public:
    DetectionSampler(const DetectorConfig& cfg, double dt)
        : rng_(cfg.seed),
          mapper_(dt, cfg.resolution),
          rate_factor_(cfg.efficiency * dt),
          dark_per_sample_(cfg.dark_rate * dt),
          dead_ticks_(cfg.dead_time > 0.0
                          ? static_cast<std::uint64_t>(std::ceil(cfg.dead_time / cfg.resolution - 1e-12))
                          : 0) {}

    // returns true and sets `tick` when the sample produces an accepted event
    bool step(double intensity, std::uint64_t sample_index, std::uint64_t& tick) {
        double p = rate_factor_ * intensity + dark_per_sample_;
        if (p > 1.0) p = 1.0;
        const double u = rng_.uniform();
        if (u >= p) return false;
        const std::uint64_t t = mapper_.tick(sample_index);
        if (have_last_ && dead_ticks_ > 0 && t < last_tick_ + dead_ticks_) return false;
        last_tick_ = t;
        have_last_ = true;
        tick = t;
        return true;
    }

private:
    Rng rng_;
    TickMapper mapper_;
    double rate_factor_;
    double dark_per_sample_;
    std::uint64_t dead_ticks_;
    std::uint64_t last_tick_ = 0;
    bool have_last_ = false;
};

} // namespace detail

/// Detect photons on an intensity sequence sampled at step dt, over integration
/// time T. The event process is a doubly stochastic (rate |E(t)|^2) point
/// process realised by per-sample thinning; timestamps are quantised to the
/// detector resolution and dead-time violations removed in arrival order.
inline TimestampStream detect(const std::vector<double>& intensity, double dt,
                              const DetectorConfig& cfg, double T, char channel = 'A') {
    validate(cfg);
    if (!(dt > 0.0)) throw std::invalid_argument("detect: dt must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("detect: integration time must be positive");
    const double covered = static_cast<double>(intensity.size()) * dt;
    if (T > covered * (1.0 + 1e-9))
        throw std::invalid_argument("detect: integration time exceeds the intensity record");

    const auto n_use = static_cast<std::size_t>(std::llround(T / dt));
    for (std::size_t i = 0; i < n_use; ++i) {
        if (!(intensity[i] >= 0.0))
            throw std::invalid_argument("detect: intensities must be non-negative");
    }

    TimestampStream out;
    out.channel = channel;
    out.resolution_ps = static_cast<std::uint64_t>(std::llround(cfg.resolution * 1e12));
    out.duration_ps = static_cast<std::uint64_t>(std::llround(T * 1e12));
    if (out.resolution_ps == 0) throw std::invalid_argument("detect: resolution below 1 ps");

    detail::DetectionSampler sampler(cfg, dt);
    double mean_expected = 0.0;
    for (std::size_t i = 0; i < n_use; ++i) {
        mean_expected += cfg.efficiency * intensity[i] * dt + cfg.dark_rate * dt;
        std::uint64_t tick = 0;
        if (sampler.step(intensity[i], i, tick)) out.ticks.push_back(tick);
    }
    mean_expected /= static_cast<double>(n_use == 0 ? 1 : n_use);
    if (mean_expected > 0.1)
        std::fprintf(stderr,
                     "detect: warning: mean expected count per sample %.3g exceeds 0.1; "
                     "thinning accuracy degrades, reduce dt or the rate\n",
                     mean_expected);
    return out;
}

} // namespace g2x
