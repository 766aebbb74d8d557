#pragma once

// Target oriented control for k-th order maps: the affine post-transform
// phi(y) = c*T + (1-c)*y, stacks of such controls, composition, and
// targeting of arbitrary points.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmtoc/dynamics.hpp"

namespace hmtoc {

struct TargetControl {
    double c = 0.0;  // control intensity, in [0, 1)
    double T = 0.0;  // target, >= 0

    double phi(double y) const { return c * T + (1.0 - c) * y; }
    bool valid() const { return c >= 0.0 && c < 1.0 && T >= 0.0; }
};

// A map wrapped by a stack of controls; controls.front() is applied first
// (innermost), controls.back() last (outermost).
struct ControlledSystem {
    MapModel base;
    std::vector<TargetControl> controls;

    int order() const { return base.order; }

    double eval(std::span<const double> point) const {
        double y = base.eval(point);
        for (const TargetControl& ctrl : controls) y = ctrl.phi(y);
        return y;
    }

    double eval_diagonal(double x) const {
        std::vector<double> p(static_cast<std::size_t>(base.order), x);
        return eval(p);
    }

    // Product of (1-c) over the stack; the gradient of the system is
    // shrink() times the gradient of the base map.
    double shrink() const {
        double s = 1.0;
        for (const TargetControl& ctrl : controls) s *= 1.0 - ctrl.c;
        return s;
    }

    ControlledSystem with(TargetControl ctrl) const;

    // View the controlled system as a MapModel (metadata propagated where
    // the control structure allows it).
    MapModel as_map() const;
};

ControlledSystem apply_control(const MapModel& map, TargetControl ctrl);
ControlledSystem apply_control(const ControlledSystem& system, TargetControl ctrl);
ControlledSystem proportional_feedback(const MapModel& map, double c);

// outer applied after inner: phi_outer(phi_inner(y)) == phi_composed(y).
TargetControl compose_controls(TargetControl outer, TargetControl inner);

struct TargetPreference {
    std::optional<double> fix_T;
    std::optional<double> fix_c;
};

// Find (c_K, T_K) with K = c_K*T_K + (1-c_K)*f(K,...,K).
TargetControl solve_target(const MapModel& map, double K,
                           const TargetPreference& preference = {});

struct TargetingResult {
    ControlledSystem system;     // inner corrective control + outer stabilizer
    TargetControl corrective;    // (c_K1, T_K1)
    TargetControl stabilizer;    // (c2, T = K1)
    TargetControl combined;      // single equivalent control
};

TargetingResult targeting_pipeline(const MapModel& map, double K1, double c2,
                                   const TargetPreference& preference = {});

// "c=<real>,T=<real>" wire form used by config files and CLI flags.
TargetControl parse_control_spec(const std::string& spec);
std::string format_control_spec(const TargetControl& ctrl);

}  // namespace hmtoc
