#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "g2x/dip_fit.hpp"
#include "g2x/random.hpp"

namespace g2x {

class PropagationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Largest coherent power fraction consistent with a dip amplitude A:
/// rho <= sqrt(2A).
inline double rho_upper_bound(double amplitude) {
    if (!(amplitude >= 0.0 && amplitude <= 0.5))
        throw std::invalid_argument("rho_upper_bound: amplitude must lie in [0, 1/2]");
    return std::sqrt(2.0 * amplitude);
}

/// Smallest coherent power fraction consistent with a dip amplitude A:
/// rho >= 2A for A <= 1/4, rho >= 1/2 + (1/2) sqrt(4A-1) above (continuous at
/// the branch point, where both give 1/2).
inline double rho_lower_bound(double amplitude) {
    if (!(amplitude >= 0.0 && amplitude <= 0.5))
        throw std::invalid_argument("rho_lower_bound: amplitude must lie in [0, 1/2]");
    if (amplitude <= 0.25) return 2.0 * amplitude;
    return 0.5 + 0.5 * std::sqrt(4.0 * amplitude - 1.0);
}

/// All real roots rho in [0,1] of the mixture relation
///   (g_unc/2 - 3/2) rho^2 + (2 - g_unc) rho + g_unc/2 - g2x0 = 0,
/// i.e. the coherent fractions that reproduce a given zero-delay correlation
/// for a known g2 of the uncorrelated part. May be empty.
inline std::vector<double> rho_from_g2x(double g2x0, double g2_unc_0) {
    if (!(g2x0 >= 0.0)) throw std::invalid_argument("rho_from_g2x: g2x0 must be non-negative");
    if (!(g2_unc_0 >= 0.0)) throw std::invalid_argument("rho_from_g2x: g2_unc_0 must be non-negative");

    const double qa = 0.5 * g2_unc_0 - 1.5;
    const double qb = 2.0 - g2_unc_0;
    const double qc = 0.5 * g2_unc_0 - g2x0;
    constexpr double edge = 1e-12;

    std::vector<double> roots;
    if (qa == 0.0) { // g2_unc_0 == 3: the relation degenerates to a line
        if (qb != 0.0) roots.push_back(-qc / qb);
    } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) return {};
        const double sq = std::sqrt(disc);
        // numerically stable pair
        const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
        double r1 = q / qa;
        double r2 = (q != 0.0) ? qc / q : r1;
        if (r1 > r2) std::swap(r1, r2);
        roots.push_back(r1);
        if (sq > 0.0) roots.push_back(r2);
    }

    std::vector<double> in_range;
    for (double r : roots) {
        if (r >= -edge && r <= 1.0 + edge) {
            r = std::clamp(r, 0.0, 1.0);
            if (in_range.empty() || std::abs(in_range.back() - r) > edge) in_range.push_back(r);
        }
    }
    return in_range;
}

struct UncG2Region {
    double lower = 0.0;
    std::optional<double> upper; ///< present only for g2x0 < 1/2
};

/// Physically allowed g2 of the uncorrelated part for a measured zero-delay
/// correlation: the boundary curves of the allowed region.
inline UncG2Region unc_g2_region(double g2x0) {
    if (!(g2x0 >= 0.0)) throw std::invalid_argument("unc_g2_region: g2x0 must be non-negative");
    UncG2Region region;
    if (g2x0 <= 2.0 / 3.0) {
        region.lower = 0.0;
    } else if (g2x0 <= 1.0) {
        region.lower = 3.0 + 1.0 / (1.0 - 2.0 * g2x0);
    } else {
        region.lower = 2.0 * g2x0;
    }
    if (g2x0 < 0.5) region.upper = 2.0 * g2x0;
    return region;
}

struct BoundEstimate {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Coherent-fraction bounds with confidence intervals, obtained by pushing the
/// fitted amplitude distribution through the bound maps.
struct RhoBounds {
    BoundEstimate upper;
    BoundEstimate lower;
    std::string method;        ///< "quadrature" or "monte-carlo"
    std::uint64_t points = 0;  ///< grid size or accepted sample count
    double confidence = 0.90;
    double input_amplitude = 0.0;
    double input_sigma = 0.0;
};

struct PropagateOptions {
    bool monte_carlo = false;
    std::uint64_t grid_points = 100000;
    std::uint64_t mc_samples = 2000000;
    std::uint64_t seed = 12345;
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

template <class F>
BoundEstimate quadrature_estimate(double a_hat, double sigma, double confidence, double lo,
                                  double hi, std::uint64_t n, F&& f) {
    const double h = (hi - lo) / static_cast<double>(n);
    double total = 0.0;
    double mean = 0.0;
    std::vector<double> wsum(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const double a = lo + (static_cast<double>(i) + 0.5) * h;
        const double z = (a - a_hat) / sigma;
        const double w = std::exp(-0.5 * z * z);
        total += w;
        mean += w * f(a);
        wsum[i] = total;
    }
    BoundEstimate est;
    est.mean = mean / total;
    const double tail = 0.5 * (1.0 - confidence);
    const auto quantile = [&](double p) {
        const double target = p * total;
        const auto it = std::lower_bound(wsum.begin(), wsum.end(), target);
        const std::uint64_t i = std::min(static_cast<std::uint64_t>(it - wsum.begin()), n - 1);
        // linear interpolation inside the cell
        const double before = (i == 0) ? 0.0 : wsum[i - 1];
        const double frac = (wsum[i] > before) ? (target - before) / (wsum[i] - before) : 0.5;
        const double a = lo + (static_cast<double>(i) + frac) * h;
        return f(std::clamp(a, lo, hi));
    };
    est.ci_low = quantile(tail);
    est.ci_high = quantile(1.0 - tail);
    return est;
}

template <class F>
BoundEstimate monte_carlo_estimate(const std::vector<double>& accepted, double confidence, F&& f) {
    std::vector<double> mapped(accepted.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
        mapped[i] = f(accepted[i]);
        mean += mapped[i];
    }
    mean /= static_cast<double>(mapped.size());
    std::sort(mapped.begin(), mapped.end());
    const double tail = 0.5 * (1.0 - confidence);
    const auto quantile = [&](double p) {
        const double idx = p * static_cast<double>(mapped.size() - 1);
        const auto i0 = static_cast<std::size_t>(idx);
        const std::size_t i1 = std::min(i0 + 1, mapped.size() - 1);
        const double frac = idx - static_cast<double>(i0);
        return mapped[i0] * (1.0 - frac) + mapped[i1] * frac;
    };
    BoundEstimate est;
    est.mean = mean;
    est.ci_low = quantile(tail);
    est.ci_high = quantile(1.0 - tail);
    return est;
}

} // namespace detail

/// Propagate the fitted amplitude through both bound maps. The amplitude is
/// modelled as normal around the fit value; mass mapping outside rho in [0,1]
/// (amplitude outside [0, 1/2]) is excluded and the remainder renormalised.
/// Expectation values and the central confidence interval are evaluated either
/// by deterministic quadrature (default) or by seeded Monte Carlo sampling.
inline RhoBounds propagate_bounds(double a_hat, double sigma_a, double confidence = 0.90,
                                  const PropagateOptions& options = {}) {
    if (!(sigma_a > 0.0)) throw std::invalid_argument("propagate_bounds: sigma must be positive");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("propagate_bounds: confidence must lie in (0,1)");

    const double lo = std::max(0.0, a_hat - 8.0 * sigma_a);
    const double hi = std::min(0.5, a_hat + 8.0 * sigma_a);
    const double surviving =
        (lo < hi) ? detail::normal_cdf((hi - a_hat) / sigma_a) - detail::normal_cdf((lo - a_hat) / sigma_a)
                  : 0.0;
    if (!(surviving >= 1e-6))
        throw PropagationError("propagate_bounds: fitted amplitude is almost surely non-physical "
                               "(surviving probability mass " + std::to_string(surviving) + ")");

    RhoBounds out;
    out.confidence = confidence;
    out.input_amplitude = a_hat;
    out.input_sigma = sigma_a;
    if (!options.monte_carlo) {
        out.method = "quadrature";
        out.points = options.grid_points;
        out.upper = detail::quadrature_estimate(a_hat, sigma_a, confidence, lo, hi,
                                                options.grid_points, rho_upper_bound);
        out.lower = detail::quadrature_estimate(a_hat, sigma_a, confidence, lo, hi,
                                                options.grid_points, rho_lower_bound);
    } else {
        out.method = "monte-carlo";
        Rng rng(options.seed);
        std::vector<double> accepted;
        accepted.reserve(options.mc_samples);
        std::uint64_t attempts = 0;
        const std::uint64_t max_attempts = options.mc_samples * 64;
        while (accepted.size() < options.mc_samples && attempts < max_attempts) {
            ++attempts;
            const double a = a_hat + sigma_a * rng.gaussian();
            if (a >= lo && a <= hi) accepted.push_back(a);
        }
        if (accepted.size() < options.mc_samples / 2)
            throw PropagationError("propagate_bounds: rejection sampling starved, "
                                   "fitted amplitude is almost surely non-physical");
        out.points = accepted.size();
        out.upper = detail::monte_carlo_estimate(accepted, confidence, rho_upper_bound);
        out.lower = detail::monte_carlo_estimate(accepted, confidence, rho_lower_bound);
    }
    return out;
}

inline RhoBounds propagate_bounds(const DipFit& fit, double confidence = 0.90,
                                  const PropagateOptions& options = {}) {
    return propagate_bounds(fit.amplitude, fit.sigma_amplitude, confidence, options);
}

} // namespace g2x
