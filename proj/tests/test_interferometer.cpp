#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "g2x/field.hpp"
#include "g2x/interferometer.hpp"
#include "test_util.hpp"

using namespace g2x;

namespace {

FieldTrajectory constant_trajectory(std::complex<double> value, std::size_t n, double dt) {
    FieldTrajectory t;
    t.dt = dt;
    t.samples.assign(n, value);
    return t;
}

} // namespace

TEST_CASE("constant field interferes fully constructively/destructively") {
    const std::complex<double> c(3.0, -1.0);
    const FieldTrajectory in = constant_trajectory(c, 2000, 1e-9);
    InterferometerConfig cfg;
    cfg.delay = 500e-9;
    const auto [a, b] = mzi_transform(in, cfg);
    REQUIRE(a.samples.size() == in.samples.size() - 500);
    for (const auto& e : a.samples) REQUIRE(std::abs(e - c * std::sqrt(2.0)) < 1e-12 * std::abs(c));
    for (const auto& e : b.samples) REQUIRE(std::abs(e) < 1e-12 * std::abs(c));
}

TEST_CASE("unit visibility conserves energy pointwise") {
    const FieldTrajectory in = sample_trajectory(make_chaotic(2e6, 100e-9), 40e-6, 5e-9, 21);
    for (const double ratio : {0.5, 0.3, 0.71}) {
        InterferometerConfig cfg;
        cfg.delay = 900e-9;
        cfg.splitting_ratio = ratio;
        const auto [a, b] = mzi_transform(in, cfg);
        const auto d = static_cast<std::size_t>(std::llround(cfg.delay / in.dt));
        for (std::size_t i = 0; i < a.samples.size(); i += 7) {
            const double out = std::norm(a.samples[i]) + std::norm(b.samples[i]);
            const double ref = std::norm(in.samples[i]) + std::norm(in.samples[i + d]);
            REQUIRE(out == Catch::Approx(ref).epsilon(1e-12).margin(1e-12));
        }
    }
}

TEST_CASE("chaotic input far beyond the coherence time splits evenly") {
    const double rate = 2e6;
    const double tau = 50e-9;
    const FieldTrajectory in = sample_trajectory(make_chaotic(rate, tau), 4e-3, 2.5e-9, 8);
    InterferometerConfig cfg;
    cfg.delay = 30.0 * tau; // field correlation over the delay ~ e^-30
    const auto [a, b] = mzi_transform(in, cfg);
    const auto est_a = testutil::batched_mean(intensity_of(a), 64);
    const auto est_b = testutil::batched_mean(intensity_of(b), 64);
    REQUIRE(std::abs(est_a.mean - rate) < 5.0 * est_a.sem);
    REQUIRE(std::abs(est_b.mean - rate) < 5.0 * est_b.sem);
}

TEST_CASE("mzi_transform validates its inputs") {
    const FieldTrajectory tiny = constant_trajectory({1.0, 0.0}, 100, 1e-9);
    InterferometerConfig cfg;
    cfg.delay = 500e-9; // longer than the 100 ns record
    REQUIRE_THROWS_AS(mzi_transform(tiny, cfg), std::invalid_argument);

    InterferometerConfig bad = cfg;
    bad.delay = -1.0;
    REQUIRE_THROWS_AS(mzi_transform(constant_trajectory({1.0, 0.0}, 2000, 1e-9), bad),
                      std::invalid_argument);
    bad = cfg;
    bad.splitting_ratio = 0.0;
    REQUIRE_THROWS_AS(mzi_transform(constant_trajectory({1.0, 0.0}, 2000, 1e-9), bad),
                      std::invalid_argument);
    bad = cfg;
    bad.visibility = 1.5;
    REQUIRE_THROWS_AS(mzi_transform(constant_trajectory({1.0, 0.0}, 2000, 1e-9), bad),
                      std::invalid_argument);
}

TEST_CASE("reduced visibility attenuates the delayed arm only") {
    const std::complex<double> c(2.0, 0.0);
    const FieldTrajectory in = constant_trajectory(c, 1500, 1e-9);
    InterferometerConfig cfg;
    cfg.delay = 300e-9;
    cfg.visibility = 0.5;
    const auto [a, b] = mzi_transform(in, cfg);
    const std::complex<double> expect_a = (c + 0.5 * c) / std::sqrt(2.0);
    const std::complex<double> expect_b = (c - 0.5 * c) / std::sqrt(2.0);
    REQUIRE(std::abs(a.samples[10] - expect_a) < 1e-12);
    REQUIRE(std::abs(b.samples[10] - expect_b) < 1e-12);
}
