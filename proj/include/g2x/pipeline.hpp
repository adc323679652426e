#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "g2x/analytic.hpp"
#include "g2x/correlator.hpp"
#include "g2x/detector.hpp"
#include "g2x/dip_fit.hpp"
#include "g2x/field.hpp"
#include "g2x/interferometer.hpp"
#include "g2x/rho_bounds.hpp"

namespace g2x {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// seed-derivation tags for the independent random streams of one scenario
inline constexpr std::uint64_t kSeedTagField = 10;
inline constexpr std::uint64_t kSeedTagDetectorA = 11;
inline constexpr std::uint64_t kSeedTagDetectorB = 12;
inline constexpr std::uint64_t kSeedTagSweepBase = 1000;

/// Flat description of the light source, as written in scenario files.
struct SourceSpec {
    std::string kind = "coherent"; ///< coherent | chaotic | mixture | twomode
    double rate = 2e7;             ///< photons/s entering the interferometer
    double tau_c = 300e-9;
    // mixture
    double rho = 1.0;
    double unc_g2 = 2.0;
    double unc_tau = 300e-9;
    // twomode
    double r_alpha = 0.5;
    double detuning = 5e7;
    double tau_alpha = 300e-9;
    double tau_beta = 300e-9;

    FieldModel build() const {
        if (kind == "coherent") return make_coherent(rate, tau_c);
        if (kind == "chaotic") return make_chaotic(rate, tau_c);
        if (kind == "mixture") return mixture_with_unc_g2(rho, rate, tau_c, unc_g2, unc_tau);
        if (kind == "twomode") return make_two_mode(rate, r_alpha, detuning, tau_alpha, tau_beta);
        throw ConfigError("source.kind must be coherent, chaotic, mixture or twomode (got '" +
                          kind + "')");
    }
};

/// Everything needed to run one simulated measurement end to end.
struct ScenarioConfig {
    SourceSpec source;
    InterferometerConfig interferometer;
    DetectorConfig detector; ///< per-channel settings; seeds are derived from `seed`
    double duration = 0.05;  ///< trajectory duration (s); integration time is duration - delay
    double dt = 1e-9;
    std::uint64_t seed = 1;
    double bin_width = 2e-9;
    double window = 2e-6;
    double confidence = 0.90;
    int threads = 1;
};

inline void validate(const ScenarioConfig& cfg) {
    const FieldModel model = cfg.source.build();
    validate(model);
    validate(cfg.interferometer);
    validate(cfg.detector);
    if (!(cfg.dt > 0.0)) throw ConfigError("run.dt must be positive");
    if (!(cfg.duration > cfg.interferometer.delay))
        throw ConfigError("run.duration must exceed the interferometer delay");
    if (cfg.duration < cfg.interferometer.delay + 10.0 * max_coherence_time(model))
        throw ConfigError("run.duration must exceed delay + 10 coherence times");
    if (cfg.dt > min_coherence_time(model) / 20.0)
        throw ConfigError("run.dt too coarse: need dt <= tau_c/20 for the shortest coherence time");
    if (!(cfg.bin_width > 0.0 && cfg.window >= 10.0 * cfg.bin_width))
        throw ConfigError("correlator window must span at least 10 bins per side");
    if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
}

// ---------------------------------------------------------------------------
// scenario files: `key = value` lines, '#' comments
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& value, const std::string& context) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError(context + ": '" + value + "' is not a number");
    }
    if (pos != value.size()) throw ConfigError(context + ": '" + value + "' is not a number");
    return out;
}

} // namespace detail

/// Parse a scenario document. Every diagnostic carries `name:line`.
inline ScenarioConfig parse_scenario(std::istream& is, const std::string& name = "<config>") {
    ScenarioConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = name + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(where + ": expected 'key = value'");
        const std::string ctx = where + " (" + key + ")";

        if (key == "source.kind") cfg.source.kind = value;
        else if (key == "source.rate") cfg.source.rate = detail::parse_number(value, ctx);
        else if (key == "source.tau_c") cfg.source.tau_c = detail::parse_number(value, ctx);
        else if (key == "mixture.rho") cfg.source.rho = detail::parse_number(value, ctx);
        else if (key == "mixture.unc_g2") cfg.source.unc_g2 = detail::parse_number(value, ctx);
        else if (key == "mixture.unc_tau") cfg.source.unc_tau = detail::parse_number(value, ctx);
        else if (key == "twomode.r_alpha") cfg.source.r_alpha = detail::parse_number(value, ctx);
        else if (key == "twomode.detuning") cfg.source.detuning = detail::parse_number(value, ctx);
        else if (key == "twomode.tau_alpha") cfg.source.tau_alpha = detail::parse_number(value, ctx);
        else if (key == "twomode.tau_beta") cfg.source.tau_beta = detail::parse_number(value, ctx);
        else if (key == "interferometer.delta") cfg.interferometer.delay = detail::parse_number(value, ctx);
        else if (key == "interferometer.splitting_ratio") cfg.interferometer.splitting_ratio = detail::parse_number(value, ctx);
        else if (key == "interferometer.visibility") cfg.interferometer.visibility = detail::parse_number(value, ctx);
        else if (key == "detector.efficiency") cfg.detector.efficiency = detail::parse_number(value, ctx);
        else if (key == "detector.resolution") cfg.detector.resolution = detail::parse_number(value, ctx);
        else if (key == "detector.dead_time") cfg.detector.dead_time = detail::parse_number(value, ctx);
        else if (key == "detector.dark_rate") cfg.detector.dark_rate = detail::parse_number(value, ctx);
        else if (key == "run.duration") cfg.duration = detail::parse_number(value, ctx);
        else if (key == "run.dt") cfg.dt = detail::parse_number(value, ctx);
        else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_number(value, ctx));
        else if (key == "correlator.bin_width") cfg.bin_width = detail::parse_number(value, ctx);
        else if (key == "correlator.window") cfg.window = detail::parse_number(value, ctx);
        else if (key == "analysis.confidence") cfg.confidence = detail::parse_number(value, ctx);
        else if (key == "run.threads") cfg.threads = static_cast<int>(detail::parse_number(value, ctx));
        else throw ConfigError(where + ": unknown key '" + key + "'");
    }
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(name + ": " + e.what());
    }
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    return parse_scenario(is, path);
}

// ---------------------------------------------------------------------------
// simulation
// ---------------------------------------------------------------------------

struct SimulationResult {
    TimestampStream a;
    TimestampStream b;
    double integration_time = 0.0;
    double delay_effective = 0.0;
};

/// Run source -> interferometer -> two detectors without materialising the
/// field: samples stream through a delay ring buffer, so memory stays O(delay)
/// for arbitrarily long records. Identical seeds give results bit-identical to
/// the sample_trajectory / mzi_transform / detect composition.
inline SimulationResult run_scenario(const ScenarioConfig& cfg) {
    validate(cfg);

    const FieldModel model = cfg.source.build();
    const auto d = static_cast<std::size_t>(std::llround(cfg.interferometer.delay / cfg.dt));
    if (d < 1) throw ConfigError("interferometer delay shorter than one sample");
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
    const double t_int = static_cast<double>(n - d) * cfg.dt;

    // the input beamsplitter halves the power reaching each arm;
    // folded into the detection efficiency of both channels
    DetectorConfig det_a = cfg.detector;
    DetectorConfig det_b = cfg.detector;
    det_a.efficiency = cfg.detector.efficiency * 0.5;
    det_b.efficiency = cfg.detector.efficiency * 0.5;
    det_a.seed = derive_seed(cfg.seed, kSeedTagDetectorA);
    det_b.seed = derive_seed(cfg.seed, kSeedTagDetectorB);

    const double ca = std::sqrt(cfg.interferometer.splitting_ratio);
    const double cb = std::sqrt(1.0 - cfg.interferometer.splitting_ratio);
    const double v = cfg.interferometer.visibility;

    auto field = make_sampler(model, cfg.dt, derive_seed(cfg.seed, kSeedTagField));
    detail::DetectionSampler sampler_a(det_a, cfg.dt);
    detail::DetectionSampler sampler_b(det_b, cfg.dt);

    SimulationResult result;
    result.integration_time = t_int;
    result.delay_effective = static_cast<double>(d) * cfg.dt;
    result.a.channel = 'A';
    result.b.channel = 'B';
    result.a.resolution_ps = result.b.resolution_ps =
        static_cast<std::uint64_t>(std::llround(cfg.detector.resolution * 1e12));
    result.a.duration_ps = result.b.duration_ps =
        static_cast<std::uint64_t>(std::llround(t_int * 1e12));

    std::vector<std::complex<double>> ring(d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> e = field->next();
        if (i >= d) {
            const std::complex<double> e0 = ring[i % d];
            const std::complex<double> ea = ca * e0 + v * cb * e;
            const std::complex<double> eb = cb * e0 - v * ca * e;
            const std::size_t j = i - d;
            std::uint64_t tick = 0;
            if (sampler_a.step(std::norm(ea), j, tick)) result.a.ticks.push_back(tick);
            if (sampler_b.step(std::norm(eb), j, tick)) result.b.ticks.push_back(tick);
        }
        ring[i % d] = e;
    }
    return result;
}

// ---------------------------------------------------------------------------
// analysis records
// ---------------------------------------------------------------------------

/// Machine-readable outcome of one dip fit plus bound propagation.
struct ResultRecord {
    double amplitude = 0.0;
    double sigma_amplitude = 0.0;
    double tau_c = 0.0;
    double sigma_tau = 0.0;
    double chi2_reduced = 0.0;
    BoundEstimate rho_upper;
    BoundEstimate rho_lower;
    std::string method;
    std::uint64_t seed = 0;
};

inline ResultRecord analyze_histogram(const CorrelationHistogram& h, double delta,
                                      double confidence = 0.90, std::uint64_t seed = 0,
                                      const PropagateOptions& prop = {}) {
    const DipFit fit = delta > 0.0 ? fit_dip_auto(h, delta) : fit_dip(h);
    const RhoBounds bounds = propagate_bounds(fit, confidence, prop);
    ResultRecord r;
    r.amplitude = fit.amplitude;
    r.sigma_amplitude = fit.sigma_amplitude;
    r.tau_c = fit.tau_c;
    r.sigma_tau = fit.sigma_tau;
    r.chi2_reduced = fit.chi2_reduced;
    r.rho_upper = bounds.upper;
    r.rho_lower = bounds.lower;
    r.method = bounds.method;
    r.seed = seed;
    return r;
}

inline void write_result(std::ostream& os, const ResultRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "A = %.12g\nsigma_A = %.12g\ntau_c = %.12g\nsigma_tau = %.12g\n"
                  "chi2_red = %.12g\n"
                  "rho_upper.mean = %.12g\nrho_upper.ci_lo = %.12g\nrho_upper.ci_hi = %.12g\n"
                  "rho_lower.mean = %.12g\nrho_lower.ci_lo = %.12g\nrho_lower.ci_hi = %.12g\n"
                  "method = %s\nseed = %llu\n",
                  r.amplitude, r.sigma_amplitude, r.tau_c, r.sigma_tau, r.chi2_reduced,
                  r.rho_upper.mean, r.rho_upper.ci_low, r.rho_upper.ci_high, r.rho_lower.mean,
                  r.rho_lower.ci_low, r.rho_lower.ci_high, r.method.c_str(),
                  static_cast<unsigned long long>(r.seed));
    os << buf;
}

inline ResultRecord read_result(std::istream& is) {
    ResultRecord r;
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    const auto num = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error("result record: missing key " + key);
        return detail::parse_number(it->second, key);
    };
    r.amplitude = num("A");
    r.sigma_amplitude = num("sigma_A");
    r.tau_c = num("tau_c");
    r.sigma_tau = num("sigma_tau");
    r.chi2_reduced = num("chi2_red");
    r.rho_upper = {num("rho_upper.mean"), num("rho_upper.ci_lo"), num("rho_upper.ci_hi")};
    r.rho_lower = {num("rho_lower.mean"), num("rho_lower.ci_lo"), num("rho_lower.ci_hi")};
    if (kv.count("method")) r.method = kv["method"];
    if (kv.count("seed")) r.seed = static_cast<std::uint64_t>(num("seed"));
    return r;
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

enum class SweepAxis { Rho, RAlpha, TauC, Rate };

inline SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "rho") return SweepAxis::Rho;
    if (s == "r_alpha") return SweepAxis::RAlpha;
    if (s == "tau_c") return SweepAxis::TauC;
    if (s == "rate") return SweepAxis::Rate;
    throw ConfigError("sweep axis must be one of rho, r_alpha, tau_c, rate (got '" + s + "')");
}

struct SweepRow {
    double axis_value = 0.0;
    double true_fraction = 0.0; ///< brightest coherent fraction of the simulated source
    ResultRecord record;
};

/// Run the full pipeline once per axis value. Point i uses the derived seed
/// derive_seed(seed, kSeedTagSweepBase + i), so rows are independent and a
/// one-point sweep reproduces a plain simulate/correlate/analyze run with that
/// seed.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& base, SweepAxis axis,
                                       const std::vector<double>& values) {
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        ScenarioConfig cfg = base;
        cfg.seed = derive_seed(base.seed, kSeedTagSweepBase + i);
        switch (axis) {
            case SweepAxis::Rho:
                cfg.source.kind = "mixture";
                cfg.source.rho = values[i];
                break;
            case SweepAxis::RAlpha:
                cfg.source.kind = "twomode";
                cfg.source.r_alpha = values[i];
                break;
            case SweepAxis::TauC:
                cfg.source.tau_c = values[i];
                break;
            case SweepAxis::Rate:
                cfg.source.rate = values[i];
                break;
        }
        const SimulationResult sim = run_scenario(cfg);
        const CorrelationHistogram h =
            cross_correlate(sim.a, sim.b, cfg.bin_width, cfg.window, cfg.threads);
        SweepRow row;
        row.axis_value = values[i];
        row.true_fraction = brightest_coherent_fraction(cfg.source.build());
        row.record = analyze_histogram(h, sim.delay_effective, cfg.confidence, cfg.seed);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_sweep_table(std::ostream& os, const std::string& axis_name,
                              const std::vector<SweepRow>& rows) {
    os << axis_name
       << "\ttrue_fraction\tA\tsigma_A\ttau_c\tsigma_tau\tchi2_red"
          "\trho_upper_mean\trho_upper_lo\trho_upper_hi"
          "\trho_lower_mean\trho_lower_lo\trho_lower_hi\tmethod\tseed\n";
    char buf[512];
    for (const auto& row : rows) {
        const ResultRecord& r = row.record;
        std::snprintf(buf, sizeof buf,
                      "%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g"
                      "\t%.12g\t%.12g\t%s\t%llu\n",
                      row.axis_value, row.true_fraction, r.amplitude, r.sigma_amplitude, r.tau_c,
                      r.sigma_tau, r.chi2_reduced, r.rho_upper.mean, r.rho_upper.ci_low,
                      r.rho_upper.ci_high, r.rho_lower.mean, r.rho_lower.ci_low,
                      r.rho_lower.ci_high, r.method.c_str(),
                      static_cast<unsigned long long>(r.seed));
        os << buf;
    }
}

} // namespace g2x
