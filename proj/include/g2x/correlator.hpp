#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "g2x/detector.hpp"

namespace g2x {

/// Normalised coincidence histogram between two timestamp streams.
///
/// Bins are laid out symmetrically: centers at k*w for k = -M..M, each bin
/// covering [center - w/2, center + w/2) with edge ties going to the right
/// bin. Normalisation is the stationary-rate factor r_a * r_b * T * w, which
/// maps an uncorrelated pair rate to 1.
struct CorrelationHistogram {
    double bin_width = 0.0;   ///< w (s)
    double half_window = 0.0; ///< W (s); outermost bin centers sit at +-W
    std::vector<double> centers;
    std::vector<std::uint64_t> counts;
    std::vector<double> g;     ///< counts / (r_a r_b T w)
    std::vector<double> sigma; ///< Poisson standard error per bin
    double rate_a = 0.0;
    double rate_b = 0.0;
    double integration_time = 0.0;

    std::size_t size() const { return counts.size(); }
    /// index of the bin centered on zero delay
    std::size_t origin_bin() const { return counts.size() / 2; }
};

namespace detail {

struct BinLayout {
    std::int64_t w_ticks;    // bin width in resolution units
    std::int64_t half_bins;  // M: bins per side
    std::int64_t num;        // 2M+1 total bins
    std::int64_t edge_num;   // (2M+1) * w_ticks: acceptance bound on 2*|d|

    // bin index for tick difference d, or -1 when outside the histogram
    std::int64_t bin(std::int64_t d) const {
        const std::int64_t x = 2 * d + edge_num;
        if (x < 0 || x >= 2 * edge_num) return -1;
        return x / (2 * w_ticks);
    }
};

inline BinLayout make_layout(double w, double W, double resolution) {
    if (!(w >= resolution * (1.0 - 1e-9)))
        throw std::invalid_argument("correlator: bin width below the timestamp resolution");
    if (!(W >= 10.0 * w))
        throw std::invalid_argument("correlator: window must span at least 10 bins per side");
    const auto w_ticks = static_cast<std::int64_t>(std::llround(w / resolution));
    if (w_ticks < 1) throw std::invalid_argument("correlator: bin width below the timestamp resolution");
    if (std::abs(w - static_cast<double>(w_ticks) * resolution) > 1e-6 * w)
        std::fprintf(stderr, "correlator: warning: bin width rounded to %g s (integer multiple of the resolution)\n",
                     static_cast<double>(w_ticks) * resolution);
    const auto half_bins = static_cast<std::int64_t>(std::llround(W / (static_cast<double>(w_ticks) * resolution)));
    BinLayout layout{};
    layout.w_ticks = w_ticks;
    layout.half_bins = half_bins;
    layout.num = 2 * half_bins + 1;
    layout.edge_num = layout.num * w_ticks;
    return layout;
}

// Counts pairs (t1 in a[range], t2 in b) into `counts` via a sliding window
// over the sorted ticks. `skip_self` drops identical-index pairs for
// autocorrelation. Cost O(range + |b| + pairs).
inline void count_pairs(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                        std::size_t a_begin, std::size_t a_end, const BinLayout& layout,
                        bool skip_self, std::vector<std::uint64_t>& counts) {
    // acceptance: 0 <= 2(t2 - t1) + edge_num < 2*edge_num
    const std::int64_t max_d = (layout.edge_num - 1) / 2;        // largest accepted t2-t1
    const std::int64_t min_d = -(layout.edge_num / 2);           // smallest accepted t2-t1
    const bool unit_bins = layout.w_ticks == 1;
    std::size_t lo = 0;
    for (std::size_t i = a_begin; i < a_end; ++i) {
        const auto t1 = static_cast<std::int64_t>(a[i]);
        while (lo < b.size() && static_cast<std::int64_t>(b[lo]) < t1 + min_d) ++lo;
        for (std::size_t j = lo; j < b.size(); ++j) {
            const auto t2 = static_cast<std::int64_t>(b[j]);
            if (t2 - t1 > max_d) break;
            if (skip_self && j == i) continue;
            if (unit_bins) {
                ++counts[static_cast<std::size_t>(t2 - t1 + layout.half_bins)];
            } else {
                const std::int64_t k = layout.bin(t2 - t1);
                if (k >= 0) ++counts[static_cast<std::size_t>(k)];
            }
        }
    }
}

inline CorrelationHistogram correlate_impl(const TimestampStream& a, const TimestampStream& b,
                                           double w, double W, bool skip_self, int segments) {
    if (a.ticks.empty() || b.ticks.empty())
        throw std::invalid_argument("correlator: empty timestamp stream");
    if (a.resolution_ps != b.resolution_ps)
        throw std::invalid_argument("correlator: mismatched timestamp resolutions");
    const double resolution = a.resolution_s();
    const BinLayout layout = make_layout(w, W, resolution);

    const double t_int = std::min(a.duration_s(), b.duration_s());
    if (W > t_int / 1000.0)
        std::fprintf(stderr, "correlator: warning: window W=%g s is large against T=%g s; "
                             "edge effects in the normalisation may not be negligible\n", W, t_int);

    std::vector<std::uint64_t> counts(static_cast<std::size_t>(layout.num), 0);
    if (segments <= 1 || a.ticks.size() < 1024) {
        count_pairs(a.ticks, b.ticks, 0, a.ticks.size(), layout, skip_self, counts);
    } else {
        const auto n_seg = static_cast<std::size_t>(segments);
        std::vector<std::vector<std::uint64_t>> partial(n_seg,
                                                        std::vector<std::uint64_t>(counts.size(), 0));
        std::vector<std::thread> workers;
        workers.reserve(n_seg);
        const std::size_t chunk = (a.ticks.size() + n_seg - 1) / n_seg;
        for (std::size_t s = 0; s < n_seg; ++s) {
            const std::size_t begin = std::min(s * chunk, a.ticks.size());
            const std::size_t end = std::min(begin + chunk, a.ticks.size());
            workers.emplace_back([&, s, begin, end] {
                count_pairs(a.ticks, b.ticks, begin, end, layout, skip_self, partial[s]);
            });
        }
        for (auto& t : workers) t.join();
        for (const auto& p : partial)
            for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += p[k];
    }

    CorrelationHistogram h;
    h.bin_width = static_cast<double>(layout.w_ticks) * resolution;
    h.half_window = static_cast<double>(layout.half_bins) * h.bin_width;
    h.rate_a = a.rate();
    h.rate_b = b.rate();
    h.integration_time = t_int;
    h.counts = std::move(counts);
    h.centers.resize(h.counts.size());
    h.g.resize(h.counts.size());
    h.sigma.resize(h.counts.size());
    const double norm = h.rate_a * h.rate_b * h.integration_time * h.bin_width;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        h.centers[k] = (static_cast<double>(k) - static_cast<double>(layout.half_bins)) * h.bin_width;
        const auto c = static_cast<double>(h.counts[k]);
        h.g[k] = c / norm;
        h.sigma[k] = (h.counts[k] > 0 ? std::sqrt(c) : 1.0) / norm;
    }
    return h;
}

} // namespace detail

/// Cross-correlation histogram of two channels: every ordered pair
/// (t1 in a, t2 in b) with t2-t1 inside the window is binned by time
/// difference. `segments` > 1 splits stream a across threads; the result is
/// bit-identical to the serial run.
inline CorrelationHistogram cross_correlate(const TimestampStream& a, const TimestampStream& b,
                                            double w, double W, int segments = 1) {
    return detail::correlate_impl(a, b, w, W, false, segments);
}

/// Autocorrelation histogram of one channel, excluding each event paired with
/// itself (distinct events in the same tick still count).
inline CorrelationHistogram autocorrelate(const TimestampStream& a, double w, double W,
                                          int segments = 1) {
    return detail::correlate_impl(a, a, w, W, true, segments);
}

/// Histogram text format: a key=value header line carrying the normalisation
/// constants, a column header, then one tab-separated row per bin.
inline void write_histogram(const std::string& path, const CorrelationHistogram& h) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("histogram: cannot open " + path + " for writing");
    char buf[256];
    std::snprintf(buf, sizeof buf, "# r_a=%.17g r_b=%.17g T=%.17g w=%.17g W=%.17g\n",
                  h.rate_a, h.rate_b, h.integration_time, h.bin_width, h.half_window);
    os << buf;
    os << "# tau_s\traw_count\tg\tsigma\n";
    for (std::size_t k = 0; k < h.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g\t%llu\t%.17g\t%.17g\n", h.centers[k],
                      static_cast<unsigned long long>(h.counts[k]), h.g[k], h.sigma[k]);
        os << buf;
    }
    if (!os) throw std::runtime_error("histogram: write to " + path + " failed");
}

inline CorrelationHistogram read_histogram(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("histogram: cannot open " + path);
    CorrelationHistogram h;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("r_a=") != std::string::npos) {
                if (std::sscanf(line.c_str(), "# r_a=%lg r_b=%lg T=%lg w=%lg W=%lg", &h.rate_a,
                                &h.rate_b, &h.integration_time, &h.bin_width, &h.half_window) != 5)
                    throw std::runtime_error("histogram: bad header in " + path);
                have_header = true;
            }
            continue;
        }
        double center = 0.0;
        unsigned long long count = 0;
        double g = 0.0;
        double sigma = 0.0;
        if (std::sscanf(line.c_str(), "%lg %llu %lg %lg", &center, &count, &g, &sigma) != 4)
            throw std::runtime_error("histogram: bad row in " + path + ": " + line);
        h.centers.push_back(center);
        h.counts.push_back(count);
        h.g.push_back(g);
        h.sigma.push_back(sigma);
    }
    if (!have_header || h.centers.empty())
        throw std::runtime_error("histogram: " + path + " is missing header or rows");
    return h;
}

} // namespace g2x
