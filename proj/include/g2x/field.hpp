#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "g2x/random.hpp"

namespace g2x {

struct FieldModel;

/// Constant-modulus source with a phase-diffusing carrier: |E| is fixed and the
/// phase undergoes a Wiener process tuned so g1(tau) = exp(-|tau|/tau_c).
struct Coherent {
    double mean_rate; ///< mean photon rate |E|^2 (photons/s at unit efficiency)
    double tau_c;     ///< coherence time (s)
};

/// Thermal-statistics source: complex Ornstein-Uhlenbeck field with independent
/// Gaussian quadratures, g1(tau) = exp(-|tau|/tau_c) (Lorentzian line shape).
struct Chaotic {
    double mean_rate;
    double tau_c;
};

/// Weighted superposition sqrt(rho) E_coh + sqrt(1-rho) E_unc of two
/// statistically independent fields normalised to the same mean intensity.
/// The uncorrelated part may itself be any model, including another Mixture.
struct Mixture {
    double rho; ///< power fraction of the coherent part, in [0,1]
    std::shared_ptr<const FieldModel> coherent_part;
    std::shared_ptr<const FieldModel> uncorrelated_part;
};

/// Two mutually incoherent constant-modulus modes with a frequency offset:
/// sqrt(r_alpha) E_alpha + sqrt(r_beta) E_beta exp(i 2 pi detuning t).
struct TwoMode {
    double mean_rate;
    double r_alpha;
    double r_beta;
    double detuning;  ///< mode frequency separation (Hz)
    double tau_alpha; ///< coherence time of mode alpha (s)
    double tau_beta;  ///< coherence time of mode beta (s)
};

struct FieldModel {
    std::variant<Coherent, Chaotic, Mixture, TwoMode> v;
};

inline FieldModel make_coherent(double mean_rate, double tau_c) {
    return FieldModel{Coherent{mean_rate, tau_c}};
}

inline FieldModel make_chaotic(double mean_rate, double tau_c) {
    return FieldModel{Chaotic{mean_rate, tau_c}};
}

inline FieldModel make_mixture(double rho, FieldModel coherent_part, FieldModel uncorrelated_part) {
    Mixture m;
    m.rho = rho;
    m.coherent_part = std::make_shared<FieldModel>(std::move(coherent_part));
    m.uncorrelated_part = std::make_shared<FieldModel>(std::move(uncorrelated_part));
    return FieldModel{std::move(m)};
}

inline FieldModel make_two_mode(double mean_rate, double r_alpha, double detuning,
                                double tau_alpha, double tau_beta) {
    return FieldModel{TwoMode{mean_rate, r_alpha, 1.0 - r_alpha, detuning, tau_alpha, tau_beta}};
}

/// Mixture whose uncorrelated part realises a requested zero-delay g2 in [1,2]:
/// g2 = 2 exactly gives a chaotic part, g2 = 1 an independent constant-modulus
/// part, anything between an internal coherent/chaotic blend with coherent
/// fraction q satisfying g2 = 2 - q^2.
inline FieldModel mixture_with_unc_g2(double rho, double mean_rate, double tau_c,
                                      double unc_g2, double unc_tau) {
    if (unc_g2 < 1.0 || unc_g2 > 2.0)
        throw std::invalid_argument("mixture_with_unc_g2: unc_g2 must lie in [1,2]");
    FieldModel unc;
    if (unc_g2 >= 2.0) {
        unc = make_chaotic(mean_rate, unc_tau);
    } else if (unc_g2 <= 1.0) {
        unc = make_coherent(mean_rate, unc_tau);
    } else {
        const double q = std::sqrt(2.0 - unc_g2);
        unc = make_mixture(q, make_coherent(mean_rate, unc_tau), make_chaotic(mean_rate, unc_tau));
    }
    return make_mixture(rho, make_coherent(mean_rate, tau_c), std::move(unc));
}

double mean_rate(const FieldModel& model);
double min_coherence_time(const FieldModel& model);
double max_coherence_time(const FieldModel& model);
void validate(const FieldModel& model);

inline double mean_rate(const FieldModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, Chaotic>) {
                return m.mean_rate;
            } else if constexpr (std::is_same_v<T, Mixture>) {
                return mean_rate(*m.coherent_part);
            } else {
                return m.mean_rate;
            }
        },
        model.v);
}

inline double min_coherence_time(const FieldModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, Chaotic>) {
                return m.tau_c;
            } else if constexpr (std::is_same_v<T, Mixture>) {
                return std::min(min_coherence_time(*m.coherent_part),
                                min_coherence_time(*m.uncorrelated_part));
            } else {
                return std::min(m.tau_alpha, m.tau_beta);
            }
        },
        model.v);
}

inline double max_coherence_time(const FieldModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, Chaotic>) {
                return m.tau_c;
            } else if constexpr (std::is_same_v<T, Mixture>) {
                return std::max(max_coherence_time(*m.coherent_part),
                                max_coherence_time(*m.uncorrelated_part));
            } else {
                return std::max(m.tau_alpha, m.tau_beta);
            }
        },
        model.v);
}

/// Power fraction of the brightest mutually-coherent component of the field.
/// This is the ground-truth quantity that the dip-amplitude bounds bracket.
inline double brightest_coherent_fraction(const FieldModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Coherent>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, Chaotic>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, Mixture>) {
                return std::max(m.rho * brightest_coherent_fraction(*m.coherent_part),
                                (1.0 - m.rho) * brightest_coherent_fraction(*m.uncorrelated_part));
            } else {
                return std::max(m.r_alpha, m.r_beta);
            }
        },
        model.v);
}

inline void validate(const FieldModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Coherent> || std::is_same_v<T, Chaotic>) {
                if (!(m.mean_rate > 0.0)) throw std::invalid_argument("field model: mean rate must be positive");
                if (!(m.tau_c > 0.0)) throw std::invalid_argument("field model: coherence time must be positive");
            } else if constexpr (std::is_same_v<T, Mixture>) {
                if (!(m.rho >= 0.0 && m.rho <= 1.0))
                    throw std::invalid_argument("field model: mixture fraction must lie in [0,1]");
                if (!m.coherent_part || !m.uncorrelated_part)
                    throw std::invalid_argument("field model: mixture components missing");
                if (!std::holds_alternative<Coherent>(m.coherent_part->v))
                    throw std::invalid_argument("field model: mixture coherent part must be a coherent model");
                validate(*m.coherent_part);
                validate(*m.uncorrelated_part);
                const double ra = mean_rate(*m.coherent_part);
                const double rb = mean_rate(*m.uncorrelated_part);
                if (std::abs(ra - rb) > 1e-9 * std::max(ra, rb))
                    throw std::invalid_argument("field model: mixture components must share the same mean intensity");
            } else {
                if (!(m.mean_rate > 0.0)) throw std::invalid_argument("field model: mean rate must be positive");
                if (!(m.r_alpha >= 0.0 && m.r_alpha <= 1.0 && m.r_beta >= 0.0 && m.r_beta <= 1.0))
                    throw std::invalid_argument("field model: mode power fractions must lie in [0,1]");
                if (std::abs(m.r_alpha + m.r_beta - 1.0) > 1e-12)
                    throw std::invalid_argument("field model: mode power fractions must sum to 1");
                if (!(m.tau_alpha > 0.0 && m.tau_beta > 0.0))
                    throw std::invalid_argument("field model: coherence times must be positive");
            }
        },
        model.v);
}

/// One realisation of a field model, sampled on a uniform grid.
/// Samples are complex amplitudes in sqrt(photons/s), so |E|^2 is the
/// instantaneous photon rate seen by an ideal detector.
struct FieldTrajectory {
    double dt = 0.0;
    double start_time = 0.0;
    std::vector<std::complex<double>> samples;
    std::uint64_t seed = 0;

    double duration() const { return static_cast<double>(samples.size()) * dt; }
};

/// Incremental sample-by-sample field generator. Trajectory materialisation and
/// the streaming detection pipeline share these, so both paths see the exact
/// same realisation for a given (model, dt, seed).
class FieldSampler {
public:
    virtual ~FieldSampler() = default;
    virtual std::complex<double> next() = 0;
};

namespace detail {

class CoherentSampler final : public FieldSampler {
public:
    CoherentSampler(const Coherent& m, double dt, std::uint64_t seed)
        : rng_(seed),
          amplitude_(std::sqrt(m.mean_rate)),
          step_sigma_(std::sqrt(2.0 * dt / m.tau_c)) {
        phase_ = 6.283185307179586476925286766559 * rng_.uniform();
    }

    std::complex<double> next() override {
        const std::complex<double> value = amplitude_ * std::complex<double>(std::cos(phase_), std::sin(phase_));
        phase_ += step_sigma_ * rng_.gaussian();
        if (phase_ > 1e8 || phase_ < -1e8) phase_ = std::fmod(phase_, 6.283185307179586476925286766559);
        return value;
    }

private:
    Rng rng_;
    double amplitude_;
    double step_sigma_;
    double phase_ = 0.0;
};

class ChaoticSampler final : public FieldSampler {
public:
    ChaoticSampler(const Chaotic& m, double dt, std::uint64_t seed)
        : rng_(seed),
          decay_(std::exp(-dt / m.tau_c)),
          stationary_sigma_(std::sqrt(0.5 * m.mean_rate)) {
        noise_sigma_ = stationary_sigma_ * std::sqrt(1.0 - decay_ * decay_);
        x_ = stationary_sigma_ * rng_.gaussian();
        y_ = stationary_sigma_ * rng_.gaussian();
    }

    std::complex<double> next() override {
        const std::complex<double> value(x_, y_);
        // exact-update recursion: autocorrelation exp(-dt/tau) per step at any dt
        x_ = decay_ * x_ + noise_sigma_ * rng_.gaussian();
        y_ = decay_ * y_ + noise_sigma_ * rng_.gaussian();
        return value;
    }

private:
    Rng rng_;
    double decay_;
    double stationary_sigma_;
    double noise_sigma_;
    double x_ = 0.0;
    double y_ = 0.0;
};

class MixtureSampler final : public FieldSampler {
public:
    MixtureSampler(std::unique_ptr<FieldSampler> coh, std::unique_ptr<FieldSampler> unc, double rho)
        : coherent_(std::move(coh)),
          uncorrelated_(std::move(unc)),
          w_coh_(std::sqrt(rho)),
          w_unc_(std::sqrt(1.0 - rho)) {}

    std::complex<double> next() override {
        std::complex<double> value(0.0, 0.0);
        if (coherent_) value += w_coh_ * coherent_->next();
        if (uncorrelated_) value += w_unc_ * uncorrelated_->next();
        return value;
    }

private:
    std::unique_ptr<FieldSampler> coherent_;
    std::unique_ptr<FieldSampler> uncorrelated_;
    double w_coh_;
    double w_unc_;
};

class TwoModeSampler final : public FieldSampler {
public:
    TwoModeSampler(std::unique_ptr<FieldSampler> alpha, std::unique_ptr<FieldSampler> beta,
                   double r_alpha, double r_beta, double detuning, double dt)
        : alpha_(std::move(alpha)),
          beta_(std::move(beta)),
          w_alpha_(std::sqrt(r_alpha)),
          w_beta_(std::sqrt(r_beta)) {
        const double angle = 6.283185307179586476925286766559 * detuning * dt;
        step_rot_ = std::complex<double>(std::cos(angle), std::sin(angle));
    }

    std::complex<double> next() override {
        const std::complex<double> value = w_alpha_ * alpha_->next() + w_beta_ * rot_ * beta_->next();
        rot_ *= step_rot_;
        if (++since_renorm_ >= 1 << 20) {
            rot_ /= std::abs(rot_);
            since_renorm_ = 0;
        }
        return value;
    }

private:
    std::unique_ptr<FieldSampler> alpha_;
    std::unique_ptr<FieldSampler> beta_;
    double w_alpha_;
    double w_beta_;
    std::complex<double> step_rot_;
    std::complex<double> rot_{1.0, 0.0};
    int since_renorm_ = 0;
};

} // namespace detail

/// Build the sampler tree for a model. The coherent (or alpha) component
/// inherits the seed itself, so a Mixture with rho = 1 reproduces the bare
/// coherent trajectory bit for bit; other components get derived seeds.
inline std::unique_ptr<FieldSampler> make_sampler(const FieldModel& model, double dt, std::uint64_t seed) {
    return std::visit(
        [&](const auto& m) -> std::unique_ptr<FieldSampler> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Coherent>) {
                return std::make_unique<detail::CoherentSampler>(m, dt, seed);
            } else if constexpr (std::is_same_v<T, Chaotic>) {
                return std::make_unique<detail::ChaoticSampler>(m, dt, seed);
            } else if constexpr (std::is_same_v<T, Mixture>) {
                std::unique_ptr<FieldSampler> coh;
                std::unique_ptr<FieldSampler> unc;
                if (m.rho > 0.0) coh = make_sampler(*m.coherent_part, dt, seed);
                if (m.rho < 1.0) unc = make_sampler(*m.uncorrelated_part, dt, derive_seed(seed, 1));
                return std::make_unique<detail::MixtureSampler>(std::move(coh), std::move(unc), m.rho);
            } else {
                auto alpha = make_sampler(make_coherent(m.mean_rate, m.tau_alpha), dt, seed);
                auto beta = make_sampler(make_coherent(m.mean_rate, m.tau_beta), dt, derive_seed(seed, 2));
                return std::make_unique<detail::TwoModeSampler>(std::move(alpha), std::move(beta),
                                                                m.r_alpha, m.r_beta, m.detuning, dt);
            }
        },
        model.v);
}

/// Draw one stochastic realisation of the model. Deterministic in
/// (model, duration, dt, seed).
inline FieldTrajectory sample_trajectory(const FieldModel& model, double duration, double dt,
                                         std::uint64_t seed) {
    validate(model);
    if (!(dt > 0.0)) throw std::invalid_argument("sample_trajectory: dt must be positive");
    if (!(duration > 0.0)) throw std::invalid_argument("sample_trajectory: duration must be positive");
    if (duration < 10.0 * dt)
        throw std::invalid_argument("sample_trajectory: duration must be at least 10 samples");
    const double tau_min = min_coherence_time(model);
    if (dt > tau_min / 20.0)
        throw std::invalid_argument("sample_trajectory: dt too coarse, need dt <= tau_c/20 for the shortest coherence time (" +
                                    std::to_string(tau_min) + " s)");

    FieldTrajectory traj;
    traj.dt = dt;
    traj.start_time = 0.0;
    traj.seed = seed;
    const auto n = static_cast<std::size_t>(std::llround(duration / dt));
    traj.samples.resize(n);
    auto sampler = make_sampler(model, dt, seed);
    for (auto& s : traj.samples) s = sampler->next();
    return traj;
}

/// |E|^2 sequence of a trajectory (instantaneous photon rate).
inline std::vector<double> intensity_of(const FieldTrajectory& traj) {
    std::vector<double> out(traj.samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(traj.samples[i]);
    return out;
}

} // namespace g2x
