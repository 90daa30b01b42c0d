#ifndef FUELOPT_REACHABILITY_HPP
#define FUELOPT_REACHABILITY_HPP

#include "fuelopt/lti.hpp"

namespace fuelopt {

/// Support-function query for the attainable set over [tau, T] in
/// direction xi: integral of |xi e^{-tA} B| dt.
struct SupportQuery {
    const LtiSystem* sys = nullptr;
    double tau = 0.0;
    double T = 0.0;
    RowVectorXd direction;
    int quad_steps = 2048;
};

/// Composite-midpoint quadrature of t -> |xi e^{-tA} B| over [tau, T].
double support(const SupportQuery& q);

enum class Membership { Inside, Boundary, Outside };

struct MemberResult {
    Membership cls = Membership::Inside;
    double max_gap = 0.0;       // max over directions of <xi, x0> - support(xi)
    RowVectorXd best_dir;       // direction attaining the max gap
};

/// Deterministic low-discrepancy unit directions on S^{n-1}.
MatrixXd sphere_directions(int n, int count);

/// Membership test for x0 in the attainable set over [0, T].
/// "Outside" is certified; "inside" only up to direction-grid resolution.
MemberResult member(const LtiSystem& sys, double T, const VectorXd& x0,
                    double tol = -1.0, int dirs = -1, int quad_steps = 2048);

}  // namespace fuelopt

#endif
