#include "hmtoc/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hmtoc/rng.hpp"
#include "json.hpp"

namespace hmtoc {

namespace {

constexpr double kBoundaryTol = 1e-10;

double diagonal_residual(const ControlledSystem& system, double P) {
    return std::fabs(P - system.eval_diagonal(P));
}

std::vector<double> fd_gradient(const MapModel& map, std::span<const double> point) {
    const int k = map.order;
    std::vector<double> g(static_cast<std::size_t>(k), 0.0);
    std::vector<double> probe(point.begin(), point.end());
    for (int j = 0; j < k; ++j) {
        auto idx = static_cast<std::size_t>(j);
        double x = point[idx];
        double h = 1e-6 * (1.0 + std::fabs(x));
        probe[idx] = x + h;
        double fp = map.eval(probe);
        try {
            probe[idx] = x - h;
            double fm = map.eval(probe);
            g[idx] = (fp - fm) / (2.0 * h);
        } catch (const EvalError&) {
            probe[idx] = x;
            g[idx] = (fp - map.eval(probe)) / h;
        }
        probe[idx] = x;
    }
    return g;
}

std::vector<double> base_gradient_at_diagonal(const ControlledSystem& system,
                                              double P, GradientSource* used) {
    std::vector<double> point(static_cast<std::size_t>(system.order()), P);
    return map_gradient(system.base, point, used);
}

// Ascending coefficients of the monic p: [ -ak, ..., -a1, 1 ].
std::vector<double> ascending_coeffs(const CharPoly& poly) {
    const int k = poly.degree();
    std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
    c[static_cast<std::size_t>(k)] = 1.0;
    for (int j = 1; j <= k; ++j)
        c[static_cast<std::size_t>(k - j)] = -poly.a[static_cast<std::size_t>(j - 1)];
    return c;
}

}  // namespace

double CharPoly::eval(double x) const {
    double v = 1.0;
    for (double aj : a) v = v * x - aj;
    return v;
}

std::vector<double> map_gradient(const MapModel& map, std::span<const double> point,
                                 GradientSource* used) {
    if (map.gradient) {
        if (used) *used = GradientSource::Analytic;
        return map.gradient(point);
    }
    if (used) *used = GradientSource::FiniteDifference;
    return fd_gradient(map, point);
}

FixedPointReport find_fixed_points(const ControlledSystem& system,
                                   std::optional<double> search_bound) {
    double B;
    if (search_bound) {
        B = *search_bound;
    } else {
        MapModel meta = system.as_map();
        if (!meta.diagonal_bound)
            throw std::invalid_argument(
                "find_fixed_points: no diagonal bound metadata and no search bound");
        B = *meta.diagonal_bound;
    }
    if (!(B > 0.0))
        throw std::invalid_argument("find_fixed_points: search bound must be positive");

    auto residual = [&](double x) { return x - system.eval_diagonal(x); };

    FixedPointReport report;
    report.search_bound = B;

    const int cells = 10000;
    const double width_tol = 1e-13 * (1.0 + B);

    double r0 = residual(0.0);
    if (r0 == 0.0)
        report.points.push_back(FixedPoint{0.0, 0.0, 0.0, 0.0});

    double prev_x = 0.0;
    double prev_r = r0;
    for (int i = 1; i <= cells; ++i) {
        double x = B * static_cast<double>(i) / cells;
        double r = residual(x);
        if (r == 0.0) {
            report.points.push_back(FixedPoint{x, 0.0, x, x});
        } else if (prev_r != 0.0 && ((prev_r < 0.0) != (r < 0.0))) {
            double lo = prev_x, hi = x;
            double rlo = prev_r;
            while (hi - lo > width_tol) {
                double mid = 0.5 * (lo + hi);
                double rm = residual(mid);
                if (rm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((rm < 0.0) == (rlo < 0.0)) {
                    lo = mid;
                    rlo = rm;
                } else {
                    hi = mid;
                }
            }
            double P = 0.5 * (lo + hi);
            report.points.push_back(
                FixedPoint{P, std::fabs(residual(P)), prev_x, x});
        }
        prev_x = x;
        prev_r = r;
    }
    std::sort(report.points.begin(), report.points.end(),
              [](const FixedPoint& a, const FixedPoint& b) { return a.value < b.value; });
    return report;
}

CharPoly char_poly(const ControlledSystem& system, double P, GradientSource* used) {
    double res = diagonal_residual(system, P);
    if (res > 1e-8 * (1.0 + std::fabs(P)))
        throw std::invalid_argument(
            "char_poly: P is not a fixed point of the system (residual " +
            std::to_string(res) + ")");
    std::vector<double> g = base_gradient_at_diagonal(system, P, used);
    double s = system.shrink();
    CharPoly poly;
    poly.a.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) poly.a[j] = s * g[j];
    return poly;
}

StabilityVerdict jury_test_k2(const CharPoly& poly) {
    if (poly.degree() != 2)
        throw std::invalid_argument("jury_test_k2: polynomial degree must be 2");
    double a1 = poly.a[0], a2 = poly.a[1];
    // p(x) = x^2 - a1 x - a2: conditions |p(0)|<1, p(1)>0, p(-1)>0.
    double m0 = 1.0 - std::fabs(a2);
    double m1 = 1.0 - a1 - a2;
    double m2 = 1.0 + a1 - a2;
    double margin = std::min({m0, m1, m2});
    StabilityVerdict v;
    v.test_used = StabilityTest::JuryTable;
    v.schur_stable = margin > 0.0;
    v.boundary = std::fabs(margin) <= kBoundaryTol;
    if (v.boundary) v.schur_stable = false;
    return v;
}

StabilityVerdict jury_table(const CharPoly& poly) {
    if (poly.degree() < 1)
        throw std::invalid_argument("jury_table: degree must be >= 1");
    std::vector<double> c = ascending_coeffs(poly);
    StabilityVerdict v;
    v.test_used = StabilityTest::JuryTable;

    while (c.size() > 1) {
        std::size_t n = c.size() - 1;
        double scale = std::max({std::fabs(c[0]), std::fabs(c[n]), 1.0});
        double margin = std::fabs(c[n]) - std::fabs(c[0]);
        if (std::fabs(margin) <= kBoundaryTol * scale) {
            v.schur_stable = false;
            v.boundary = true;
            return v;
        }
        if (margin < 0.0) {
            v.schur_stable = false;
            return v;
        }
        // Schur reduction: q(z) = (c_n p(z) - c_0 p*(z)) / z.
        std::vector<double> q(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            q[i] = c[n] * c[i + 1] - c[0] * c[n - 1 - i];
        double lead = q[n - 1];
        if (std::fabs(lead) < 1e-14 * scale * scale) {
            v.schur_stable = false;
            v.inconclusive = true;
            return v;
        }
        for (double& qi : q) qi /= lead;
        c = std::move(q);
    }
    v.schur_stable = true;
    return v;
}

std::vector<std::complex<double>> durand_kerner(const CharPoly& poly) {
    const int k = poly.degree();
    if (k < 1) throw std::invalid_argument("durand_kerner: degree must be >= 1");

    auto eval = [&](std::complex<double> z) {
        std::complex<double> v = 1.0;
        for (double aj : poly.a) v = v * z - aj;
        return v;
    };

    double amax = 0.0;
    for (double aj : poly.a) amax = std::max(amax, std::fabs(aj));
    double radius = 1.0 + amax;

    std::vector<std::complex<double>> z(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        double angle = 2.0 * M_PI * j / k + 0.4;
        z[static_cast<std::size_t>(j)] =
            radius * std::complex<double>(std::cos(angle), std::sin(angle));
    }

    for (int sweep = 0; sweep < 500; ++sweep) {
        double worst = 0.0;
        for (int j = 0; j < k; ++j) {
            auto idx = static_cast<std::size_t>(j);
            std::complex<double> denom = 1.0;
            for (int m = 0; m < k; ++m)
                if (m != j) denom *= z[idx] - z[static_cast<std::size_t>(m)];
            if (denom == std::complex<double>(0.0, 0.0)) {
                z[idx] += 1e-8;  // coincident estimates; nudge apart
                worst = 1.0;
                continue;
            }
            std::complex<double> delta = eval(z[idx]) / denom;
            z[idx] -= delta;
            worst = std::max(worst, std::abs(delta) / (1.0 + std::abs(z[idx])));
        }
        if (worst <= 1e-12) return z;
    }
    throw std::runtime_error("durand_kerner: no convergence within 500 sweeps");
}

StabilityVerdict root_oracle(const CharPoly& poly) {
    std::vector<std::complex<double>> roots = durand_kerner(poly);
    double mx = 0.0;
    for (const auto& r : roots) mx = std::max(mx, std::abs(r));
    StabilityVerdict v;
    v.test_used = StabilityTest::RootOracle;
    v.max_root_modulus = mx;
    v.schur_stable = mx < 1.0 - kBoundaryTol;
    v.boundary = std::fabs(mx - 1.0) <= kBoundaryTol;
    return v;
}

StabilityVerdict schur_verdict(const CharPoly& poly) {
    StabilityVerdict v = jury_table(poly);
    if (v.inconclusive) return root_oracle(poly);
    return v;
}

double fujiwara_bound(const CharPoly& poly) {
    double bound = 0.0;
    for (int i = 1; i <= poly.degree(); ++i)
        bound = std::max(bound,
                         std::pow(std::fabs(poly.a[static_cast<std::size_t>(i - 1)]),
                                  1.0 / i));
    return 2.0 * bound;
}

namespace {

void require_base_fixed_point(const MapModel& map, double K) {
    double residual = std::fabs(map.eval_diagonal(K) - K);
    if (residual > 1e-8 * (1.0 + std::fabs(K)))
        throw std::invalid_argument("K is not a fixed point of the map (residual " +
                                    std::to_string(residual) + ")");
}

}  // namespace

CStarEstimate cstar_k2_sharp(const MapModel& map, double K) {
    if (map.order != 2)
        throw std::invalid_argument("cstar_k2_sharp: map order must be 2");
    require_base_fixed_point(map, K);
    std::vector<double> point{K, K};
    std::vector<double> g = map_gradient(map, point);
    double fx = g[0], fy = g[1];
    double denom = std::max(std::fabs(fy), std::fabs(fx) + fy);
    CStarEstimate est;
    est.method = CStarMethod::K2Sharp;
    est.inputs = {{"K", K}, {"df_dx1", fx}, {"df_dx2", fy}, {"denominator", denom}};
    est.value = denom > 0.0 ? std::max(0.0, 1.0 - 1.0 / denom) : 0.0;
    return est;
}

CStarEstimate cstar_derivative_sum(const MapModel& map, double K) {
    require_base_fixed_point(map, K);
    std::vector<double> point(static_cast<std::size_t>(map.order), K);
    std::vector<double> g = map_gradient(map, point);
    double sum = 0.0;
    for (double gj : g) sum += std::fabs(gj);
    CStarEstimate est;
    est.method = CStarMethod::DerivativeSum;
    est.inputs = {{"K", K}, {"derivative_sum", sum}};
    est.value = sum > 0.0 ? std::max(0.0, 1.0 - 1.0 / sum) : 0.0;
    return est;
}

CStarEstimate cstar_fujiwara(const ControlledSystem& system, double interval_lo,
                             double interval_hi, int c_samples) {
    if (system.controls.empty())
        throw std::invalid_argument("cstar_fujiwara: system must carry a control");
    if (c_samples < 1)
        throw std::invalid_argument("cstar_fujiwara: c_samples must be >= 1");
    if (!(interval_hi > interval_lo) || interval_lo < 0.0)
        throw std::invalid_argument("cstar_fujiwara: bad interval");

    // The theorem's map is the system under the outermost control; peel it off.
    ControlledSystem inner{system.base,
                           {system.controls.begin(), system.controls.end() - 1}};
    double T = system.controls.back().T;
    double inner_shrink = inner.shrink();

    CStarEstimate est;
    est.method = CStarMethod::Fujiwara;
    est.flags.push_back("sampled_supremum");

    double A = 0.0;
    int skipped = 0;
    for (int t = 1; t <= c_samples; ++t) {
        double c = static_cast<double>(t) / (c_samples + 1);
        ControlledSystem sys_c = inner.with(TargetControl{c, T});
        FixedPointReport fps;
        try {
            fps = find_fixed_points(sys_c, interval_hi);
        } catch (const std::exception&) {
            ++skipped;
            continue;
        }
        bool any = false;
        for (const FixedPoint& fp : fps.points) {
            if (fp.value < interval_lo) continue;
            any = true;
            std::vector<double> point(static_cast<std::size_t>(system.order()),
                                      fp.value);
            std::vector<double> g = map_gradient(system.base, point);
            for (int i = 1; i <= system.order(); ++i) {
                double di = inner_shrink * g[static_cast<std::size_t>(i - 1)];
                A = std::max(A, std::pow(std::fabs(di), 1.0 / i));
            }
        }
        if (!any) ++skipped;
    }
    if (skipped > 0) est.flags.push_back("skipped_grid_points");
    est.inputs = {{"A", A},
                  {"c_samples", static_cast<double>(c_samples)},
                  {"skipped", static_cast<double>(skipped)},
                  {"interval_lo", interval_lo},
                  {"interval_hi", interval_hi}};
    est.value = A > 0.0 ? std::max(0.0, 1.0 - 1.0 / (2.0 * A)) : 0.0;
    return est;
}

CStarEstimate cstar_global(const MapModel& map, double K, std::optional<double> L) {
    double Lval;
    if (L) {
        Lval = *L;
    } else {
        if (!map.analytic_lipschitz)
            throw std::invalid_argument(
                "cstar_global: no Lipschitz constant supplied and none in metadata");
        if (std::fabs(map.analytic_lipschitz->K - K) > 1e-9 * (1.0 + std::fabs(K)))
            throw std::invalid_argument(
                "cstar_global: metadata Lipschitz pair is for a different fixed point");
        Lval = map.analytic_lipschitz->L;
    }
    if (!(Lval > 0.0)) throw std::invalid_argument("cstar_global: L must be positive");
    CStarEstimate est;
    est.method = CStarMethod::GlobalLipschitz;
    est.inputs = {{"K", K}, {"L", Lval}};
    est.value = std::max(0.0, 1.0 - 1.0 / Lval);
    return est;
}

double lipschitz_grid_lower(const MapModel& map, double K, double domain_hi,
                            long samples, std::uint64_t rng_seed) {
    if (!(domain_hi > K))
        throw std::invalid_argument("lipschitz_grid_lower: domain_hi must exceed K");
    const int k = map.order;
    CounterRng rng(rng_seed, 0);
    std::vector<double> x(static_cast<std::size_t>(k));
    double best = 0.0;
    for (long s = 0; s < samples; ++s) {
        double dist = 0.0;
        for (int j = 0; j < k; ++j) {
            double v = domain_hi *
                       rng.unit(static_cast<std::uint64_t>(s) * k +
                                static_cast<std::uint64_t>(j));
            x[static_cast<std::size_t>(j)] = v;
            dist += std::fabs(v - K);
        }
        if (dist < 1e-9) continue;
        double fx;
        try {
            fx = map.eval(x);
        } catch (const EvalError&) {
            continue;
        }
        best = std::max(best, std::fabs(fx - K) / dist);
    }
    return best;
}

double lipschitz_from_bounded(const MapModel& map, double K, double local_L) {
    if (!(K > 0.0))
        throw std::invalid_argument("lipschitz_from_bounded: K must be positive");
    if (!map.global_bound)
        throw std::invalid_argument("lipschitz_from_bounded: map carries no global bound");
    double A = *map.global_bound;
    return std::max({local_L, A / K - 1.0, 1.0});
}

namespace {

bool stable_at(const std::function<ControlledSystem(double)>& builder, double c,
               const std::optional<double>& target_point) {
    ControlledSystem sys = builder(c);
    double P;
    if (target_point) {
        P = *target_point;
    } else {
        FixedPointReport fps = find_fixed_points(sys);
        if (fps.points.empty()) return false;
        P = fps.points.back().value;
    }
    try {
        return schur_verdict(char_poly(sys, P)).schur_stable;
    } catch (const std::invalid_argument&) {
        return false;  // residual check failed: the point is not fixed at this c
    }
}

}  // namespace

MinimalCResult minimal_stabilizing_c(
    const std::function<ControlledSystem(double)>& system_builder, int c_grid,
    std::optional<double> target_point) {
    if (c_grid < 2) throw std::invalid_argument("minimal_stabilizing_c: grid too small");

    std::vector<char> stable(static_cast<std::size_t>(c_grid), 0);
    std::vector<double> cs(static_cast<std::size_t>(c_grid), 0.0);
    for (int i = 0; i < c_grid; ++i) {
        auto idx = static_cast<std::size_t>(i);
        cs[idx] = static_cast<double>(i) / c_grid;
        stable[idx] = stable_at(system_builder, cs[idx], target_point) ? 1 : 0;
    }

    MinimalCResult result;
    for (int i = 1; i < c_grid; ++i) {
        auto idx = static_cast<std::size_t>(i);
        if (!stable[idx - 1] && stable[idx])
            result.transitions.push_back(StabilityTransition{cs[idx - 1], cs[idx]});
    }

    if (result.transitions.empty()) {
        if (stable[0]) {
            result.c_star = 0.0;
            return result;
        }
        throw std::runtime_error("minimal_stabilizing_c: no stable c found on the grid");
    }

    double lo = result.transitions.back().c_before;
    double hi = result.transitions.back().c_after;
    while (hi - lo > 1e-6) {
        double mid = 0.5 * (lo + hi);
        if (stable_at(system_builder, mid, target_point))
            hi = mid;
        else
            lo = mid;
    }
    result.c_star = 0.5 * (lo + hi);
    return result;
}

std::string cstar_method_name(CStarMethod method) {
    switch (method) {
        case CStarMethod::K2Sharp: return "k2_sharp";
        case CStarMethod::DerivativeSum: return "derivative_sum";
        case CStarMethod::Fujiwara: return "fujiwara";
        case CStarMethod::GlobalLipschitz: return "global_lipschitz";
    }
    return "unknown";
}

std::string report_to_text(const StabilityReport& report) {
    char buf[160];
    std::string out;
    out += "system: " + report.system_label + "\n";
    std::snprintf(buf, sizeof(buf), "fixed-point search bound: %.17g\n",
                  report.fixed_points.search_bound);
    out += buf;
    for (const FixedPoint& fp : report.fixed_points.points) {
        std::snprintf(buf, sizeof(buf), "fixed point: %.17g (residual %.3g)\n",
                      fp.value, fp.residual);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "analyzed point: %.17g\n", report.analyzed_point);
    out += buf;
    out += "characteristic polynomial a_j:";
    for (double aj : report.poly.a) {
        std::snprintf(buf, sizeof(buf), " %.17g", aj);
        out += buf;
    }
    out += "\n";
    out += std::string("schur stable: ") + (report.verdict.schur_stable ? "yes" : "no");
    if (report.verdict.boundary) out += " (boundary)";
    if (report.verdict.max_root_modulus) {
        std::snprintf(buf, sizeof(buf), " (max root modulus %.12g)",
                      *report.verdict.max_root_modulus);
        out += buf;
    }
    out += "\n";
    out += "gradient source: " + report.gradient_source + "\n";
    for (const CStarEstimate& est : report.estimates) {
        std::snprintf(buf, sizeof(buf), "c* [%s] = %.17g",
                      cstar_method_name(est.method).c_str(), est.value);
        out += buf;
        if (!est.flags.empty()) {
            out += " (";
            for (std::size_t i = 0; i < est.flags.size(); ++i) {
                if (i) out += ", ";
                out += est.flags[i];
            }
            out += ")";
        }
        out += "\n";
    }
    return out;
}

std::string report_to_json(const StabilityReport& report) {
    nlohmann::json j;
    j["system"] = report.system_label;
    j["search_bound"] = report.fixed_points.search_bound;
    j["fixed_points"] = nlohmann::json::array();
    for (const FixedPoint& fp : report.fixed_points.points)
        j["fixed_points"].push_back({{"value", fp.value}, {"residual", fp.residual}});
    j["analyzed_point"] = report.analyzed_point;
    j["char_poly"] = report.poly.a;
    j["schur_stable"] = report.verdict.schur_stable;
    j["boundary"] = report.verdict.boundary;
    if (report.verdict.max_root_modulus)
        j["max_root_modulus"] = *report.verdict.max_root_modulus;
    j["gradient_source"] = report.gradient_source;
    j["estimates"] = nlohmann::json::array();
    for (const CStarEstimate& est : report.estimates) {
        nlohmann::json e;
        e["method"] = cstar_method_name(est.method);
        e["value"] = est.value;
        e["inputs"] = est.inputs;
        e["flags"] = est.flags;
        j["estimates"].push_back(e);
    }
    return j.dump(2);
}

}  // namespace hmtoc
