// Command-line front end for the interferometric photon-correlation pipeline:
// simulate timestamp streams, correlate them, fit the zero-delay dip and turn
// it into coherent-fraction bounds.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "g2x/pipeline.hpp"
#include "g2x/timestamp_io.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitFitFailure = 3;
constexpr int kExitNonPhysical = 4;

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(g2x::detail::parse_number(item, "--values"));
    }
    if (out.empty()) throw g2x::ConfigError("--values: expected a comma-separated list of numbers");
    return out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    return os;
}

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<double> bin_width;
    std::optional<double> window;
    std::optional<double> delta;
    std::optional<double> confidence;
    std::optional<int> threads;
};

void apply_overrides(g2x::ScenarioConfig& cfg, const CommonFlags& flags) {
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.bin_width) cfg.bin_width = *flags.bin_width;
    if (flags.window) cfg.window = *flags.window;
    if (flags.delta) cfg.interferometer.delay = *flags.delta;
    if (flags.confidence) cfg.confidence = *flags.confidence;
    if (flags.threads) cfg.threads = *flags.threads;
    g2x::validate(cfg);
}

int cmd_simulate(const std::string& config_path, const std::string& output_prefix,
                 const CommonFlags& flags) {
    g2x::ScenarioConfig cfg = g2x::load_scenario(config_path);
    apply_overrides(cfg, flags);

    const g2x::SimulationResult sim = g2x::run_scenario(cfg);
    const std::string path_a = output_prefix + "_A.pts";
    const std::string path_b = output_prefix + "_B.pts";
    g2x::write_pts1(path_a, sim.a);
    g2x::write_pts1(path_b, sim.b);

    std::printf("channel A: %zu events, rate %.6g counts/s -> %s\n", sim.a.ticks.size(),
                sim.a.rate(), path_a.c_str());
    std::printf("channel B: %zu events, rate %.6g counts/s -> %s\n", sim.b.ticks.size(),
                sim.b.rate(), path_b.c_str());
    std::printf("integration time %.6g s, delay %.6g s, seed %llu\n", sim.integration_time,
                sim.delay_effective, static_cast<unsigned long long>(cfg.seed));
    return 0;
}

int cmd_correlate(const std::string& file_a, const std::string& file_b, const std::string& output,
                  const CommonFlags& flags) {
    const g2x::TimestampStream a = g2x::read_pts1(file_a, 'A');
    const g2x::TimestampStream b = g2x::read_pts1(file_b, 'B');
    const double w = flags.bin_width.value_or(2e-9);
    const double window = flags.window.value_or(2e-6);
    const g2x::CorrelationHistogram h =
        g2x::cross_correlate(a, b, w, window, flags.threads.value_or(1));
    g2x::write_histogram(output, h);
    std::printf("histogram: %zu bins, rates %.6g / %.6g counts/s, T %.6g s -> %s\n", h.size(),
                h.rate_a, h.rate_b, h.integration_time, output.c_str());
    return 0;
}

int cmd_analyze(const std::string& hist_path, const std::string& output,
                const std::string& plot_path, bool monte_carlo, const CommonFlags& flags) {
    const g2x::CorrelationHistogram h = g2x::read_histogram(hist_path);
    const double delta = flags.delta.value_or(0.0);
    g2x::PropagateOptions prop;
    prop.monte_carlo = monte_carlo;
    if (flags.seed) prop.seed = *flags.seed;
    const g2x::ResultRecord record = g2x::analyze_histogram(
        h, delta, flags.confidence.value_or(0.90), flags.seed.value_or(0), prop);

    if (!output.empty()) {
        auto os = open_output(output);
        g2x::write_result(os, record);
    }
    g2x::write_result(std::cout, record);

    if (!plot_path.empty()) {
        auto os = open_output(plot_path);
        os << "tau_s\tg\tsigma\tg_fit\n";
        char buf[160];
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double fit =
                1.0 - record.amplitude * std::exp(-std::abs(h.centers[k]) / record.tau_c);
            std::snprintf(buf, sizeof buf, "%.12g\t%.12g\t%.12g\t%.12g\n", h.centers[k], h.g[k],
                          h.sigma[k], fit);
            os << buf;
        }
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis_name,
              const std::string& values_csv, const std::string& output, const CommonFlags& flags) {
    g2x::ScenarioConfig cfg = g2x::load_scenario(config_path);
    apply_overrides(cfg, flags);
    const g2x::SweepAxis axis = g2x::sweep_axis_from_string(axis_name);
    const std::vector<double> values = parse_values(values_csv);

    const std::vector<g2x::SweepRow> rows = g2x::run_sweep(cfg, axis, values);
    if (!output.empty()) {
        auto os = open_output(output);
        g2x::write_sweep_table(os, axis_name, rows);
    } else {
        g2x::write_sweep_table(std::cout, axis_name, rows);
    }
    return 0;
}

int cmd_region(double g_min, double g_max, int steps, const std::string& output) {
    if (!(g_max > g_min) || steps < 2) throw g2x::ConfigError("region: need max > min and steps >= 2");
    std::ostringstream body;
    body << "g2x0\tg2_unc_lower\tg2_unc_upper\n";
    char buf[128];
    for (int i = 0; i < steps; ++i) {
        const double g = g_min + (g_max - g_min) * i / (steps - 1);
        const g2x::UncG2Region r = g2x::unc_g2_region(g);
        if (r.upper)
            std::snprintf(buf, sizeof buf, "%.12g\t%.12g\t%.12g\n", g, r.lower, *r.upper);
        else
            std::snprintf(buf, sizeof buf, "%.12g\t%.12g\tnan\n", g, r.lower);
        body << buf;
    }
    if (!output.empty()) {
        auto os = open_output(output);
        os << body.str();
    } else {
        std::cout << body.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"interferometric photon correlation toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // common flags may follow the subcommand name

    CommonFlags flags;
    app.add_option_function<double>(
        "--seed", [&](double v) { flags.seed = static_cast<std::uint64_t>(v); },
        "override the scenario seed");
    app.add_option_function<double>(
        "--bin-width", [&](double v) { flags.bin_width = v; }, "histogram bin width (s)");
    app.add_option_function<double>(
        "--window", [&](double v) { flags.window = v; }, "histogram half window (s)");
    app.add_option_function<double>(
        "--delta", [&](double v) { flags.delta = v; }, "interferometer delay (s)");
    app.add_option_function<double>(
        "--confidence", [&](double v) { flags.confidence = v; }, "confidence level for rho bounds");
    app.add_option_function<int>(
        "--threads", [&](int v) { flags.threads = v; }, "worker threads for the correlator");

    std::string config_path;
    std::string output;
    std::string file_a, file_b;
    std::string plot_path;
    std::string axis_name = "rho";
    std::string values_csv;
    bool monte_carlo = false;
    double region_min = 0.0, region_max = 2.0;
    int region_steps = 1001;

    auto* simulate = app.add_subcommand("simulate", "simulate timestamp streams for a scenario");
    simulate->add_option("--config", config_path, "scenario file")->required();
    simulate->add_option("--output", output, "output prefix for the PTS1 files")->required();

    auto* correlate = app.add_subcommand("correlate", "cross-correlate two PTS1 streams");
    correlate->add_option("file_a", file_a, "channel A stream")->required();
    correlate->add_option("file_b", file_b, "channel B stream")->required();
    correlate->add_option("--output", output, "histogram output file")->required();

    auto* analyze = app.add_subcommand("analyze", "fit the dip and propagate rho bounds");
    analyze->add_option("histogram", file_a, "histogram file")->required();
    analyze->add_option("--output", output, "result record output file");
    analyze->add_option("--plot-data", plot_path, "write data + fitted curve for plotting");
    analyze->add_flag("--monte-carlo", monte_carlo, "propagate by Monte Carlo instead of quadrature");

    auto* sweep = app.add_subcommand("sweep", "run the pipeline over a parameter axis");
    sweep->add_option("--config", config_path, "scenario file")->required();
    sweep->add_option("--axis", axis_name, "rho | r_alpha | tau_c | rate")->required();
    sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
    sweep->add_option("--output", output, "table output file");

    auto* region = app.add_subcommand("region", "emit the allowed-region boundary curves");
    region->add_option("--min", region_min, "smallest zero-delay correlation");
    region->add_option("--max", region_max, "largest zero-delay correlation");
    region->add_option("--steps", region_steps, "number of grid points");
    region->add_option("--output", output, "table output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, output, flags);
        if (correlate->parsed()) return cmd_correlate(file_a, file_b, output, flags);
        if (analyze->parsed()) return cmd_analyze(file_a, output, plot_path, monte_carlo, flags);
        if (sweep->parsed()) return cmd_sweep(config_path, axis_name, values_csv, output, flags);
        if (region->parsed()) return cmd_region(region_min, region_max, region_steps, output);
    } catch (const g2x::FitError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFitFailure;
    } catch (const g2x::PropagationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNonPhysical;
    } catch (const g2x::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
