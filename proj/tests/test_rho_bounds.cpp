#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "g2x/analytic.hpp"
#include "g2x/rho_bounds.hpp"

using namespace g2x;

TEST_CASE("bound formulas at the pinned values") {
    REQUIRE(rho_upper_bound(0.0) == 0.0);
    REQUIRE(rho_upper_bound(0.5) == 1.0);
    REQUIRE(rho_upper_bound(0.455) == Catch::Approx(0.9539392014169456).epsilon(1e-14));
    REQUIRE(rho_lower_bound(0.0) == 0.0);
    REQUIRE(rho_lower_bound(0.5) == 1.0);
    REQUIRE(rho_lower_bound(0.455) == Catch::Approx(0.9527692569068709).epsilon(1e-14));

    // the published fraction 0.986 maps back through the lower bound to
    // A = ((2 rho - 1)^2 + 1)/4 = 0.486196, and both maps pin it tightly
    REQUIRE(rho_lower_bound(0.4862) == Catch::Approx(0.9860041).margin(5e-7));
    REQUIRE(rho_upper_bound(0.4862) == Catch::Approx(0.9861034).margin(5e-7));
    const double a_inverted = ((2.0 * 0.986 - 1.0) * (2.0 * 0.986 - 1.0) + 1.0) / 4.0;
    REQUIRE(rho_lower_bound(a_inverted) == Catch::Approx(0.986).margin(1e-12));
    REQUIRE(rho_upper_bound(a_inverted) >= 0.986);

    REQUIRE_THROWS_AS(rho_upper_bound(-1e-12), std::invalid_argument);
    REQUIRE_THROWS_AS(rho_upper_bound(0.5 + 1e-12), std::invalid_argument);
    REQUIRE_THROWS_AS(rho_lower_bound(-0.2), std::invalid_argument);
    REQUIRE_THROWS_AS(rho_lower_bound(0.7), std::invalid_argument);
}

TEST_CASE("lower bound is continuous at the branch point") {
    REQUIRE(rho_lower_bound(0.25) == 0.5);
    const double below = rho_lower_bound(0.25 - 1e-13);
    const double above = rho_lower_bound(0.25 + 1e-13);
    REQUIRE(std::abs(below - 0.5) < 1e-12);
    REQUIRE(std::abs(above - 0.5) < 1e-6); // sqrt kink: |slope| diverges above the branch
    // both branch expressions agree at A = 1/4
    const double branch1 = 2.0 * 0.25;
    const double branch2 = 0.5 + 0.5 * std::sqrt(4.0 * 0.25 - 1.0);
    REQUIRE(std::abs(branch1 - branch2) < 1e-12);
}

TEST_CASE("bound ordering on a dense grid") {
    for (int i = 0; i <= 5000; ++i) {
        const double a = 0.5 * i / 5000.0;
        const double lo = rho_lower_bound(a);
        const double hi = rho_upper_bound(a);
        REQUIRE(lo <= hi + 1e-14);
        if (a > 1e-3 && a < 0.5 - 1e-3) REQUIRE(lo < hi);
    }
    REQUIRE(rho_lower_bound(0.0) == rho_upper_bound(0.0));
    REQUIRE(rho_lower_bound(0.5) == rho_upper_bound(0.5));
}

TEST_CASE("bounds bracket the brightest coherent fraction of any mixture") {
    // For a mixture (rho, g_unc) the uncorrelated part with g2 = 2 - q^2
    // carries its own coherent component of relative weight q; the physically
    // meaningful fraction is the larger of the two.
    for (int ri = 0; ri <= 100; ++ri) {
        for (int gi = 0; gi <= 100; ++gi) {
            const double rho = ri / 100.0;
            const double g_unc = 1.0 + gi / 100.0;
            const double amplitude = 1.0 - analytic_g2x_mixture_zero(rho, g_unc);
            const double brightest = std::max(rho, (1.0 - rho) * std::sqrt(2.0 - g_unc));
            REQUIRE(rho_lower_bound(amplitude) <= brightest + 1e-12);
            REQUIRE(brightest <= rho_upper_bound(amplitude) + 1e-12);
        }
    }
}

TEST_CASE("rho_from_g2x returns the in-range roots") {
    const auto both = rho_from_g2x(0.5, 1.0);
    REQUIRE(both.size() == 2);
    REQUIRE(both[0] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(both[1] == Catch::Approx(1.0).margin(1e-12));

    const auto zero = rho_from_g2x(1.0, 2.0);
    REQUIRE(zero.size() == 1);
    REQUIRE(zero[0] == 0.0);

    const auto inverted = rho_from_g2x(0.755, 2.0);
    REQUIRE(inverted.size() == 1);
    REQUIRE(inverted[0] == Catch::Approx(0.7).epsilon(1e-12));

    // degenerate linear case
    const auto linear = rho_from_g2x(1.2, 3.0);
    REQUIRE(linear.size() == 1);
    REQUIRE(linear[0] == Catch::Approx(0.3).margin(1e-12));

    // no real solution inside [0,1]
    REQUIRE(rho_from_g2x(0.2, 1.0).empty());

    // round trip through the forward map
    for (double rho = 0.0; rho <= 1.0; rho += 0.05) {
        for (const double g : {1.0, 1.3, 1.8, 2.0}) {
            const double g2x0 = analytic_g2x_mixture_zero(rho, g);
            const auto roots = rho_from_g2x(g2x0, g);
            bool found = false;
            for (const double r : roots) found = found || std::abs(r - rho) < 1e-9;
            REQUIRE(found);
        }
    }
}

TEST_CASE("allowed-region boundaries match the hand-evaluated values") {
    const UncG2Region r04 = unc_g2_region(0.4);
    REQUIRE(r04.lower == 0.0);
    REQUIRE(r04.upper.has_value());
    REQUIRE(*r04.upper == 0.8);

    const UncG2Region r23 = unc_g2_region(2.0 / 3.0);
    REQUIRE(r23.lower == 0.0);
    REQUIRE(!r23.upper.has_value());

    REQUIRE(unc_g2_region(0.9).lower == 1.75);
    REQUIRE(unc_g2_region(1.0).lower == 2.0);
    REQUIRE(unc_g2_region(1.5).lower == 3.0);

    // continuity: the adjacent branch expressions agree at both branch points
    const double middle_at_23 = 3.0 + 1.0 / (1.0 - 2.0 * (2.0 / 3.0));
    REQUIRE(std::abs(middle_at_23 - 0.0) < 1e-12);
    const double middle_at_1 = 3.0 + 1.0 / (1.0 - 2.0 * 1.0);
    REQUIRE(std::abs(middle_at_1 - 2.0 * 1.0) < 1e-12);
    // and the function itself is continuous across them at the slope scale
    REQUIRE(std::abs(unc_g2_region(2.0 / 3.0 + 1e-13).lower) < 1e-11);
    REQUIRE(std::abs(unc_g2_region(1.0 - 1e-13).lower - 2.0) < 1e-11);
    REQUIRE(std::abs(unc_g2_region(1.0 + 1e-13).lower - 2.0) < 1e-11);

    // upper boundary exists exactly below 1/2
    REQUIRE(unc_g2_region(0.499).upper.has_value());
    REQUIRE(!unc_g2_region(0.5).upper.has_value());
}

TEST_CASE("propagation reduces to the point formulas in the delta limit") {
    const RhoBounds b = propagate_bounds(0.25, 1e-9);
    REQUIRE(b.lower.mean == Catch::Approx(0.5).margin(1e-4));
    REQUIRE(b.upper.mean == Catch::Approx(std::sqrt(0.5)).margin(1e-6));
    REQUIRE(b.lower.ci_low <= b.lower.mean);
    REQUIRE(b.lower.mean <= b.lower.ci_high);
}

TEST_CASE("below-threshold amplitudes give bounds pinned near zero") {
    const RhoBounds b = propagate_bounds(0.0, 0.0003);
    REQUIRE(b.lower.mean < 1.5e-3);
    REQUIRE(b.lower.ci_high < 5e-3);
    REQUIRE(b.upper.mean < 0.05);
    REQUIRE(b.lower.mean <= b.upper.mean);
}

TEST_CASE("quadrature and Monte Carlo propagation agree") {
    for (const auto& [a_hat, sigma] : {std::pair{0.3, 0.005}, std::pair{0.4862, 0.0021}}) {
        const RhoBounds quad = propagate_bounds(a_hat, sigma);
        PropagateOptions mc;
        mc.monte_carlo = true;
        mc.seed = 999;
        const RhoBounds sampled = propagate_bounds(a_hat, sigma, 0.90, mc);
        REQUIRE(std::abs(quad.upper.mean - sampled.upper.mean) < 1e-3);
        REQUIRE(std::abs(quad.lower.mean - sampled.lower.mean) < 1e-3);
        REQUIRE(std::abs(quad.upper.ci_low - sampled.upper.ci_low) < 1e-3);
        REQUIRE(std::abs(quad.upper.ci_high - sampled.upper.ci_high) < 1e-3);
        REQUIRE(std::abs(quad.lower.ci_low - sampled.lower.ci_low) < 1e-3);
        REQUIRE(std::abs(quad.lower.ci_high - sampled.lower.ci_high) < 1e-3);
    }
}

TEST_CASE("propagation invariants hold across inputs") {
    for (const double a_hat : {0.01, 0.2, 0.25, 0.4, 0.49}) {
        for (const double sigma : {0.0005, 0.005, 0.05}) {
            const RhoBounds b = propagate_bounds(a_hat, sigma);
            for (const BoundEstimate& e : {b.upper, b.lower}) {
                REQUIRE(e.mean >= 0.0);
                REQUIRE(e.mean <= 1.0);
                REQUIRE(e.ci_low <= e.mean + 1e-12);
                REQUIRE(e.mean <= e.ci_high + 1e-12);
            }
            REQUIRE(b.lower.mean <= b.upper.mean + 1e-12);
        }
    }
}

TEST_CASE("wholly non-physical amplitudes are an explicit failure") {
    REQUIRE_THROWS_AS(propagate_bounds(-0.1, 0.001), PropagationError);
    REQUIRE_THROWS_AS(propagate_bounds(0.7, 0.001), PropagationError);
    REQUIRE_THROWS_AS(propagate_bounds(0.1, 0.0), std::invalid_argument);
}
