#pragma once

// Bifurcation sweeps over the control intensity c and contraction-rate
// certificates.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hmtoc/control.hpp"

namespace hmtoc {

struct ScanConfig {
    std::function<ControlledSystem(double)> system_builder;
    int c_count = 300;      // grid c = j/c_count, j = 1..c_count
    long transient = 3000;  // discarded iterations
    int samples = 50;       // recorded values per grid point
    std::uint64_t seed_rng = 0;
    double seed_lo = 0.0;   // initial conditions drawn uniformly from (lo, hi]
    double seed_hi = 1.0;
};

struct ScanRow {
    double c = 0.0;
    std::vector<double> samples;
    std::vector<double> initial;
    bool diverged = false;
};

struct ScanResult {
    std::vector<ScanRow> rows;  // ordered by c
};

ScanResult run_scan(const ScanConfig& config);

struct ConvergenceCheck {
    double theta = 0.0;
    double K = 0.0;
    std::vector<long> violations;  // steps where the contraction estimate failed

    bool certified() const { return violations.empty(); }
};

// Checks |u_n - K| <= theta^floor(n/k) * max_j |u_j - K| + 1e-9 along the
// orbit of `system` from `seed`.
ConvergenceCheck verify_contraction(const ControlledSystem& system, double K,
                                    double theta, std::span<const double> seed,
                                    long steps);

enum class ScanFormat { Table, ScatterSvg };

void export_scan(const ScanResult& result, const std::string& path,
                 ScanFormat format);
std::string scan_table_string(const ScanResult& result);
std::string scan_svg_string(const ScanResult& result);

}  // namespace hmtoc
