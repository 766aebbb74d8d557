#include "hmtoc/control.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hmtoc {

namespace {

void require_valid(const TargetControl& ctrl) {
    if (!ctrl.valid())
        throw std::invalid_argument("control requires c in [0,1) and T >= 0");
}

}  // namespace

ControlledSystem ControlledSystem::with(TargetControl ctrl) const {
    require_valid(ctrl);
    ControlledSystem out = *this;
    out.controls.push_back(ctrl);
    return out;
}

MapModel ControlledSystem::as_map() const {
    MapModel m;
    m.order = base.order;
    ControlledSystem self = *this;
    m.evaluator = [self](std::span<const double> x) { return self.eval(x); };
    if (base.gradient) {
        double s = shrink();
        auto grad = base.gradient;
        m.gradient = [grad, s](std::span<const double> x) {
            std::vector<double> g = grad(x);
            for (double& v : g) v *= s;
            return g;
        };
    }
    if (base.diagonal_bound) {
        double bound = *base.diagonal_bound;
        for (const TargetControl& ctrl : controls)
            bound = std::max(bound, ctrl.T);
        m.diagonal_bound = bound;
    }
    if (base.global_bound) {
        double a = *base.global_bound;
        for (const TargetControl& ctrl : controls) a = ctrl.phi(a);
        m.global_bound = a;
    }
    if (base.analytic_lipschitz) {
        bool targets_match = true;
        for (const TargetControl& ctrl : controls)
            if (ctrl.T != base.analytic_lipschitz->K) targets_match = false;
        if (targets_match)
            m.analytic_lipschitz =
                LipschitzPair{base.analytic_lipschitz->K,
                              shrink() * base.analytic_lipschitz->L};
    }
    m.label = base.label;
    for (const TargetControl& ctrl : controls)
        m.label += "|" + format_control_spec(ctrl);
    return m;
}

ControlledSystem apply_control(const MapModel& map, TargetControl ctrl) {
    require_valid(ctrl);
    return ControlledSystem{map, {ctrl}};
}

ControlledSystem apply_control(const ControlledSystem& system, TargetControl ctrl) {
    return system.with(ctrl);
}

ControlledSystem proportional_feedback(const MapModel& map, double c) {
    return apply_control(map, TargetControl{c, 0.0});
}

TargetControl compose_controls(TargetControl outer, TargetControl inner) {
    require_valid(outer);
    require_valid(inner);
    if (inner.c == 0.0 && outer.c == 0.0) return TargetControl{0.0, 0.0};
    if (inner.c == 0.0) return outer;
    if (outer.c == 0.0) return inner;
    double c3 = outer.c + inner.c - outer.c * inner.c;
    double t3 =
        (outer.c * outer.T + inner.c * inner.T - outer.c * inner.c * inner.T) / c3;
    return TargetControl{c3, t3};
}

TargetControl solve_target(const MapModel& map, double K,
                           const TargetPreference& preference) {
    if (K <= 0.0) throw std::invalid_argument("solve_target: K must be positive");
    double fK = map.eval_diagonal(K);
    if (!std::isfinite(fK))
        throw std::invalid_argument("solve_target: f(K,...,K) is not finite");

    if (preference.fix_T && preference.fix_c)
        throw std::invalid_argument("solve_target: at most one preference");

    if (preference.fix_T) {
        double T0 = *preference.fix_T;
        if (T0 < 0.0) throw std::invalid_argument("solve_target: T must be >= 0");
        if (T0 == fK) {
            if (fK == K) return TargetControl{0.5, T0};
            throw std::invalid_argument(
                "solve_target: infeasible target T (T == f(K,...,K) != K)");
        }
        double c = (K - fK) / (T0 - fK);
        if (!(c > 0.0 && c < 1.0))
            throw std::invalid_argument(
                "solve_target: infeasible target T (required c outside (0,1))");
        return TargetControl{c, T0};
    }
    if (preference.fix_c) {
        double c0 = *preference.fix_c;
        if (!(c0 > 0.0 && c0 < 1.0))
            throw std::invalid_argument("solve_target: c must be in (0,1)");
        double T = (K - (1.0 - c0) * fK) / c0;
        if (T < 0.0)
            throw std::invalid_argument(
                "solve_target: infeasible intensity c (required T negative)");
        return TargetControl{c0, T};
    }

    if (fK > K) return TargetControl{(fK - K) / fK, 0.0};
    if (fK < K) return TargetControl{0.5, 2.0 * K - fK};
    return TargetControl{0.5, K};
}

TargetingResult targeting_pipeline(const MapModel& map, double K1, double c2,
                                   const TargetPreference& preference) {
    if (!(c2 > 0.0 && c2 < 1.0))
        throw std::invalid_argument("targeting_pipeline: c2 must be in (0,1)");
    TargetControl corrective = solve_target(map, K1, preference);
    TargetControl stabilizer{c2, K1};
    ControlledSystem system =
        apply_control(map, corrective).with(stabilizer);
    TargetControl combined = compose_controls(stabilizer, corrective);
    return TargetingResult{std::move(system), corrective, stabilizer, combined};
}

TargetControl parse_control_spec(const std::string& spec) {
    double c = 0.0, T = 0.0;
    if (std::sscanf(spec.c_str(), "c=%lf,T=%lf", &c, &T) != 2)
        throw std::invalid_argument("control spec must be c=<real>,T=<real>: " + spec);
    TargetControl ctrl{c, T};
    require_valid(ctrl);
    return ctrl;
}

std::string format_control_spec(const TargetControl& ctrl) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "c=%.17g,T=%.17g", ctrl.c, ctrl.T);
    return buf;
}

}  // namespace hmtoc
