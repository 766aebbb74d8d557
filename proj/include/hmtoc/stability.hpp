#pragma once

// Fixed-point location, Schur stability of the linearization, and the
// family of stabilizing control-intensity thresholds c*.

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hmtoc/control.hpp"

namespace hmtoc {

struct FixedPoint {
    double value = 0.0;
    double residual = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

struct FixedPointReport {
    std::vector<FixedPoint> points;  // sorted ascending
    double search_bound = 0.0;
};

// p(x) = x^k - a1 x^(k-1) - ... - ak with aj = shrink * df/dxj at the
// diagonal fixed point.
struct CharPoly {
    std::vector<double> a;  // a1 .. ak

    int degree() const { return static_cast<int>(a.size()); }
    double eval(double x) const;
};

enum class StabilityTest { JuryTable, RootOracle };

struct StabilityVerdict {
    bool schur_stable = false;
    std::optional<double> max_root_modulus;
    StabilityTest test_used = StabilityTest::JuryTable;
    bool boundary = false;      // within tolerance of the unit circle
    bool inconclusive = false;  // degenerate Jury pivot
};

enum class CStarMethod { K2Sharp, DerivativeSum, Fujiwara, GlobalLipschitz };

std::string cstar_method_name(CStarMethod method);

struct CStarEstimate {
    double value = 0.0;
    CStarMethod method = CStarMethod::K2Sharp;
    std::map<std::string, double> inputs;
    std::vector<std::string> flags;
};

enum class GradientSource { Analytic, FiniteDifference };

// Gradient of the base map with the fallback chain analytic -> central
// finite differences (h = 1e-6 * (1 + |scale|)).
std::vector<double> map_gradient(const MapModel& map, std::span<const double> point,
                                 GradientSource* used = nullptr);

FixedPointReport find_fixed_points(const ControlledSystem& system,
                                   std::optional<double> search_bound = {});

CharPoly char_poly(const ControlledSystem& system, double P,
                   GradientSource* used = nullptr);

StabilityVerdict jury_test_k2(const CharPoly& poly);
StabilityVerdict jury_table(const CharPoly& poly);
StabilityVerdict root_oracle(const CharPoly& poly);

// jury_table with root_oracle fallback on an inconclusive table.
StabilityVerdict schur_verdict(const CharPoly& poly);

// All complex roots via Durand-Kerner; tolerance 1e-12, at most 500 sweeps.
std::vector<std::complex<double>> durand_kerner(const CharPoly& poly);

// Root-modulus bound 2 * max_i |a_i|^(1/i) for the monic p above.
double fujiwara_bound(const CharPoly& poly);

CStarEstimate cstar_k2_sharp(const MapModel& map, double K);
CStarEstimate cstar_derivative_sum(const MapModel& map, double K);
CStarEstimate cstar_fujiwara(const ControlledSystem& system, double interval_lo,
                             double interval_hi, int c_samples);
CStarEstimate cstar_global(const MapModel& map, double K,
                           std::optional<double> L = {});

// Empirical lower bound on the constant L in |f(x)-K| <= L * sum_j |x_j - K|
// from random samples in [0, domain_hi]^k.  The sum (l1) norm is the one under
// which the closed-form constants for the builtin maps are honest; see
// docs/formats.md.
double lipschitz_grid_lower(const MapModel& map, double K, double domain_hi,
                            long samples, std::uint64_t rng_seed);
double lipschitz_from_bounded(const MapModel& map, double K, double local_L);

struct StabilityTransition {
    double c_before = 0.0;  // last unstable grid point
    double c_after = 0.0;   // first stable grid point
};

struct MinimalCResult {
    double c_star = 0.0;
    std::vector<StabilityTransition> transitions;
};

MinimalCResult minimal_stabilizing_c(
    const std::function<ControlledSystem(double)>& system_builder, int c_grid,
    std::optional<double> target_point = {});

// Aggregate report for one system / fixed point, with text and JSON forms.
struct StabilityReport {
    std::string system_label;
    FixedPointReport fixed_points;
    double analyzed_point = 0.0;
    CharPoly poly;
    StabilityVerdict verdict;
    std::string gradient_source;
    std::vector<CStarEstimate> estimates;
};

std::string report_to_text(const StabilityReport& report);
std::string report_to_json(const StabilityReport& report);

}  // namespace hmtoc
