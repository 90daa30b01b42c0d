#ifndef FUELOPT_EXTREMAL_HPP
#define FUELOPT_EXTREMAL_HPP

#include "fuelopt/control.hpp"
#include "fuelopt/lti.hpp"

#include <optional>

namespace fuelopt {

enum class ExtremalMode { Normal, Abnormal };

/// Adjoint row vector; p(t) = p0 e^{-tA}.
struct Covector {
    RowVectorXd p0;
    ExtremalMode mode = ExtremalMode::Normal;
};

/// p0 e^{-tA} B, the row m-vector whose magnitude drives the switches.
RowVectorXd switching_vector(const LtiSystem& sys, const Covector& cov, double t);

struct ExtremalControl {
    ControlSignal u;
    bool singular_arc = false;  // |p(t)B| == 1 on the whole grid
};

/// Samples the feedback law at the midpoints of `grid` (strictly increasing
/// breakpoints). Normal mode: u = (pB)*/|pB| when |pB| > 1, zero when
/// |pB| <= 1 (ties resolve to coast). Abnormal mode: normalize whenever
/// pB != 0; requires p0 != 0.
ExtremalControl extremal_control(const LtiSystem& sys, const Covector& cov,
                                 const VectorXd& grid);

/// Scalar-control variant that locates the switch times by bisection on
/// |pB| - 1 (normal) or pB = 0 (abnormal) to 1e-12 and returns an exact
/// switching-time representation.
ExtremalControl extremal_control_refined(const LtiSystem& sys, const Covector& cov,
                                         double T, int scan_nodes = 4096);

enum class Anchor { Initial, Terminal };

/// Exact per-interval propagation through the augmented-matrix exponential;
/// terminal anchoring integrates backward from x_anchor = x(T).
Trajectory integrate(const LtiSystem& sys, const VectorXd& x_anchor, Anchor anchor,
                     const ControlSignal& u);

double cost_l1(const ControlSignal& u);

struct PmpResiduals {
    double maximality_gap = 0.0;   // max over grid of max_v h_v - h_u
    double terminal_miss = 0.0;    // |x(T)|
    // Free-time conditions (filled when requested):
    double terminal_switch = 0.0;  // | |p(T)B| - 1 |
    double tail_excess = 0.0;      // max_tau (|p(T)e^{-tau A}B| - 1)_+
    bool freetime_checked = false;
};

/// Diagnostics for a report candidate (x0, u, p0, mode, T).
PmpResiduals pmp_residuals(const LtiSystem& sys, const VectorXd& x0,
                           const ControlSignal& u, const Covector& cov, double T,
                           bool freetime = false, double tau_max = 0.0);

}  // namespace fuelopt

#endif
