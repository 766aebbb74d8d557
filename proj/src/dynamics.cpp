#include "hmtoc/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace hmtoc {

MapModel builtin_ricker(double r, int k) {
    if (r <= 0.0) throw std::invalid_argument("ricker: r must be positive");
    if (k < 1) throw std::invalid_argument("ricker: k must be >= 1");
    MapModel m;
    m.order = k;
    m.evaluator = [r, k](std::span<const double> x) {
        return x[0] * std::exp(r - x[static_cast<std::size_t>(k - 1)]);
    };
    m.gradient = [r, k](std::span<const double> x) {
        std::vector<double> g(static_cast<std::size_t>(k), 0.0);
        double e = std::exp(r - x[static_cast<std::size_t>(k - 1)]);
        g[0] += e;
        g[static_cast<std::size_t>(k - 1)] += -x[0] * e;  // k==1 folds both terms
        return g;
    };
    m.diagonal_bound = r;
    m.analytic_lipschitz = LipschitzPair{0.0, std::exp(r)};
    char buf[64];
    std::snprintf(buf, sizeof(buf), "ricker(r=%g,k=%d)", r, k);
    m.label = buf;
    return m;
}

MapModel builtin_pielou(double r, int k) {
    if (r < 1.0)
        throw std::invalid_argument("pielou: r must be >= 1 for the analytic Lipschitz pair");
    if (k < 1) throw std::invalid_argument("pielou: k must be >= 1");
    MapModel m;
    m.order = k;
    m.evaluator = [r, k](std::span<const double> x) {
        return r * x[0] / (1.0 + x[static_cast<std::size_t>(k - 1)]);
    };
    m.gradient = [r, k](std::span<const double> x) {
        std::vector<double> g(static_cast<std::size_t>(k), 0.0);
        double denom = 1.0 + x[static_cast<std::size_t>(k - 1)];
        g[0] += r / denom;
        g[static_cast<std::size_t>(k - 1)] += -r * x[0] / (denom * denom);
        return g;
    };
    m.diagonal_bound = r - 1.0;
    m.analytic_lipschitz = LipschitzPair{r - 1.0, r};
    char buf[64];
    std::snprintf(buf, sizeof(buf), "pielou(r=%g,k=%d)", r, k);
    m.label = buf;
    return m;
}

MapModel builtin_exp2() {
    MapModel m;
    m.order = 2;
    m.evaluator = [](std::span<const double> x) {
        return std::exp(1.0 - x[0]) * std::exp(1.0 - x[1] * x[1]);
    };
    m.gradient = [](std::span<const double> x) {
        double v = std::exp(1.0 - x[0]) * std::exp(1.0 - x[1] * x[1]);
        return std::vector<double>{-v, -2.0 * x[1] * v};
    };
    m.diagonal_bound = 1.0;
    m.global_bound = std::exp(2.0);
    m.analytic_lipschitz = LipschitzPair{1.0, 2.0 * std::exp(2.0)};
    m.label = "exp2";
    return m;
}

MapModel from_expression(ExprAst ast) {
    auto shared = std::make_shared<const ExprAst>(std::move(ast));
    MapModel m;
    m.order = shared->order;
    m.evaluator = [shared](std::span<const double> x) {
        return eval_expr(*shared, x);
    };
    m.gradient = [shared](std::span<const double> x) {
        return eval_expr_dual(*shared, x).partials;
    };
    m.label = "expr:" + print_expr(*shared);
    return m;
}

Orbit iterate(const MapModel& map, std::span<const double> seed, long steps) {
    const int k = map.order;
    if (static_cast<int>(seed.size()) != k)
        throw std::invalid_argument("seed length does not match map order");
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");

    Orbit orbit;
    orbit.initial.assign(seed.begin(), seed.end());
    orbit.map_label = map.label;
    orbit.values.reserve(static_cast<std::size_t>(steps));

    std::vector<double> history(seed.begin(), seed.end());  // x1 = most recent
    for (long n = 1; n <= steps; ++n) {
        double next;
        try {
            next = map.eval(history);
        } catch (const EvalError& e) {
            orbit.failure = OrbitFailure{n, e.what()};
            return orbit;
        }
        if (!std::isfinite(next) || std::fabs(next) > kOrbitBlowupLimit) {
            orbit.failure = OrbitFailure{n, "orbit magnitude exceeded blow-up limit"};
            return orbit;
        }
        orbit.values.push_back(next);
        for (int j = k - 1; j > 0; --j)
            history[static_cast<std::size_t>(j)] = history[static_cast<std::size_t>(j - 1)];
        history[0] = next;
    }
    return orbit;
}

void write_orbit(const Orbit& orbit, std::ostream& out) {
    out << "n,u\n";
    char buf[64];
    for (std::size_t i = 0; i < orbit.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, orbit.values[i]);
        out << buf;
    }
}

}  // namespace hmtoc
