#pragma once

// k-th order maps on the nonnegative orthant and orbit iteration.
//
// Argument convention used everywhere: x1 is the most recent state u_n,
// xk is u_{n-k+1}.

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hmtoc/expr.hpp"

namespace hmtoc {

struct LipschitzPair {
    double K;  // fixed point of the diagonal
    double L;  // |f(x)-K| <= L * max_j |x_j - K|
};

struct MapModel {
    int order = 1;
    std::function<double(std::span<const double>)> evaluator;
    // Optional exact gradient (d f / d x_1 .. d f / d x_k).
    std::function<std::vector<double>(std::span<const double>)> gradient;
    // f(x,...,x) <= x for x >= diagonal_bound.
    std::optional<double> diagonal_bound;
    // 0 <= f <= global_bound everywhere.
    std::optional<double> global_bound;
    std::optional<LipschitzPair> analytic_lipschitz;
    std::string label;

    double eval(std::span<const double> point) const { return evaluator(point); }
    double eval_diagonal(double x) const {
        std::vector<double> p(static_cast<std::size_t>(order), x);
        return evaluator(p);
    }
};

struct OrbitFailure {
    long step;  // 1-based index of the value that failed to be produced
    std::string reason;
};

struct Orbit {
    std::vector<double> values;   // u_1 .. u_N
    std::vector<double> initial;  // seeding vector, most recent first
    std::string map_label;
    std::optional<OrbitFailure> failure;

    bool diverged() const { return failure.has_value(); }
};

// Orbit values above this magnitude abort iteration as a blow-up.
inline constexpr double kOrbitBlowupLimit = 1e150;

MapModel builtin_ricker(double r, int k);
MapModel builtin_pielou(double r, int k);
MapModel builtin_exp2();
MapModel from_expression(ExprAst ast);

Orbit iterate(const MapModel& map, std::span<const double> seed, long steps);

// Delimited text: header "n,u", 17 significant digits.
void write_orbit(const Orbit& orbit, std::ostream& out);

}  // namespace hmtoc
