#include "hmtoc/scan.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "hmtoc/parallel.hpp"
#include "hmtoc/rng.hpp"

namespace hmtoc {

ScanResult run_scan(const ScanConfig& config) {
    if (!config.system_builder)
        throw std::invalid_argument("run_scan: missing system builder");
    if (config.c_count < 1 || config.samples < 1 || config.transient < 0)
        throw std::invalid_argument("run_scan: bad grid configuration");
    if (!(config.seed_hi > config.seed_lo))
        throw std::invalid_argument("run_scan: empty seed box");

    ScanResult result;
    result.rows.resize(static_cast<std::size_t>(config.c_count));

    parallel_for(static_cast<std::size_t>(config.c_count), [&](std::size_t idx) {
        const int j = static_cast<int>(idx) + 1;
        double c = static_cast<double>(j) / config.c_count;
        if (c >= 1.0) c = 1.0 - 1e-9;  // the grid's top point lies outside [0,1)

        ControlledSystem system = config.system_builder(c);
        const int k = system.order();

        CounterRng rng(config.seed_rng, static_cast<std::uint64_t>(j));
        ScanRow row;
        row.c = c;
        row.initial.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i)
            row.initial[static_cast<std::size_t>(i)] = rng.open_closed(
                static_cast<std::uint64_t>(i), config.seed_lo, config.seed_hi);

        MapModel map = system.as_map();
        Orbit orbit = iterate(map, row.initial, config.transient + config.samples);
        if (orbit.diverged()) {
            row.diverged = true;
            if (orbit.values.size() > static_cast<std::size_t>(config.transient))
                row.samples.assign(
                    orbit.values.begin() + config.transient, orbit.values.end());
        } else {
            row.samples.assign(orbit.values.begin() + config.transient,
                               orbit.values.end());
        }
        result.rows[idx] = std::move(row);
    });
    return result;
}

ConvergenceCheck verify_contraction(const ControlledSystem& system, double K,
                                    double theta, std::span<const double> seed,
                                    long steps) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("verify_contraction: theta must be in (0,1)");
    const int k = system.order();

    double initial_spread = 0.0;
    for (double u : seed) initial_spread = std::max(initial_spread, std::fabs(u - K));

    ConvergenceCheck check;
    check.theta = theta;
    check.K = K;

    Orbit orbit = iterate(system.as_map(), seed, steps);
    for (std::size_t i = 0; i < orbit.values.size(); ++i) {
        long n = static_cast<long>(i) + 1;
        double bound = std::pow(theta, static_cast<double>(n / k)) * initial_spread;
        if (std::fabs(orbit.values[i] - K) > bound + 1e-9)
            check.violations.push_back(n);
    }
    if (orbit.diverged()) check.violations.push_back(orbit.failure->step);
    return check;
}

std::string scan_table_string(const ScanResult& result) {
    std::string out = "c,sample_index,u\n";
    char buf[96];
    for (const ScanRow& row : result.rows) {
        for (std::size_t i = 0; i < row.samples.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g\n", row.c, i + 1,
                          row.samples[i]);
            out += buf;
        }
    }
    return out;
}

std::string scan_svg_string(const ScanResult& result) {
    const double width = 900.0, height = 600.0;
    const double left = 70.0, right = 880.0, top = 30.0, bottom = 560.0;

    double umax = 0.0;
    for (const ScanRow& row : result.rows)
        for (double u : row.samples) umax = std::max(umax, u);
    if (umax <= 0.0) umax = 1.0;

    char buf[256];
    std::string svg;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" "
                  "height=\"%g\" viewBox=\"0 0 %g %g\">\n",
                  width, height, width, height);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                  left, bottom, right, bottom);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                  left, top, left, bottom);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"16\">c</text>\n",
                  0.5 * (left + right), height - 10.0);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"16\">u</text>\n", 15.0,
                  0.5 * (top + bottom));
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"12\">0</text>\n", left - 10.0,
                  bottom + 16.0);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"12\">1</text>\n", right - 4.0,
                  bottom + 16.0);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"12\">%.6g</text>\n", 20.0,
                  top + 5.0, umax);
    svg += buf;

    for (const ScanRow& row : result.rows) {
        double x = left + (right - left) * row.c;
        for (double u : row.samples) {
            double y = bottom - (bottom - top) * (u / umax);
            std::snprintf(buf, sizeof(buf),
                          "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"1\" fill=\"black\"/>\n",
                          x, y);
            svg += buf;
        }
    }
    svg += "</svg>\n";
    return svg;
}

void export_scan(const ScanResult& result, const std::string& path,
                 ScanFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("export_scan: cannot open " + path);
    out << (format == ScanFormat::Table ? scan_table_string(result)
                                        : scan_svg_string(result));
    if (!out) throw std::runtime_error("export_scan: write failed for " + path);
}

}  // namespace hmtoc
