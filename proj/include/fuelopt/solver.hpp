#ifndef FUELOPT_SOLVER_HPP
#define FUELOPT_SOLVER_HPP

#include "fuelopt/extremal.hpp"
#include "fuelopt/reachability.hpp"

#include <optional>

namespace fuelopt {

enum class SolveMode { Normal, Abnormal, Infeasible };

struct SolveReport {
    double cost = std::numeric_limits<double>::quiet_NaN();
    ControlSignal control;
    std::optional<Covector> covector;
    SolveMode mode = SolveMode::Normal;
    double horizon_used = 0.0;
    bool attained = false;  // meaningful for the infinite-horizon path only
    PmpResiduals residuals;
    bool polish_skipped = false;
    bool singular_arc = false;
    double duality_gap = std::numeric_limits<double>::quiet_NaN();
    long iterations = 0;
};

struct SolveOptions {
    int N = 4096;                  // discretization intervals
    long max_iters = 4000000;      // primal-dual iteration cap
    double gap_tol_scale = 1e-7;   // duality gap <= scale * (1 + T)
    double feas_tol_scale = 1e-8;  // |Mu - b| <= scale * (1 + |x0|)
    bool polish = true;            // Newton shooting on the covector
    int member_dirs = -1;          // default 64 n
    double member_tol = -1.0;      // default 1e-6 (1 + |x0|)
    int member_quad = 2048;
    Eigen::VectorXd warm_dual;     // optional dual warm start
    double probe_T0 = 1.0;         // first horizon probe
    int max_doublings = 24;        // feasibility probe cap
    int sweep_doublings = 16;      // infinite-horizon T sweep length
};

/// Minimum L1 cost steering x0 to the origin in exactly time T.
SolveReport solve_finite(const LtiSystem& sys, double T, const VectorXd& x0,
                         const SolveOptions& opts = {});

struct MinTimeResult {
    double T_min = 0.0;
    SolveReport report;
};

/// Minimum time to reach the origin; the control is the abnormal extremal.
MinTimeResult solve_time_optimal(const LtiSystem& sys, const VectorXd& x0,
                                 const SolveOptions& opts = {});

/// Infinite-horizon cost. Hyperbolic A: project onto E+, sweep horizons to
/// the plateau and certify with the free-time terminal conditions
/// (attained = true). Otherwise: numerical infimum estimate, attained = false.
SolveReport solve_infinite(const LtiSystem& sys, const VectorXd& x0,
                           const SolveOptions& opts = {});

struct RobustnessResult {
    double max_deviation = 0.0;
    int infeasible_count = 0;
};

/// Re-solves under a fixed set of relative-size-delta perturbations of
/// (T, x0, A, B) and returns the largest cost deviation.
RobustnessResult robustness_probe(const LtiSystem& sys, double T,
                                  const VectorXd& x0, double delta,
                                  const SolveOptions& opts = {});

}  // namespace fuelopt

#endif
