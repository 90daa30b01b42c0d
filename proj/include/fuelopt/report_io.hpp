#ifndef FUELOPT_REPORT_IO_HPP
#define FUELOPT_REPORT_IO_HPP

#include "fuelopt/solver.hpp"
#include "fuelopt/synthesis2d.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace fuelopt {

/// Decimal rendering with 17 significant digits (round-trip exact).
std::string fmt17(double v);

nlohmann::json report_to_json(const SolveReport& rep);

/// Rows (t, x1..xn, u1..um, |pB|) sampled on the trajectory grid.
std::string trajectory_csv(const LtiSystem& sys, const Trajectory& traj,
                           const ControlSignal& u, const Covector* cov);

/// Rows (xi_1..xi_n, support, gap) for a direction fan.
std::string reach_csv(const LtiSystem& sys, double T, const VectorXd& x0,
                      int dirs, int quad_steps);

/// Polyline samples of a curve for plotting.
std::string curves_csv(const std::vector<Curve2D>& curves, int samples_per_curve);

struct SvgTrajectory {
    const Trajectory* traj = nullptr;
    const ControlSignal* u = nullptr;  // may be null: whole path coasts
};

/// Standalone SVG document; one group per trajectory, path segments carry
/// class "bang" or "coast" according to the control on the segment.
std::string trajectories_svg(const std::vector<SvgTrajectory>& items,
                             const std::vector<Curve2D>& overlay_curves,
                             int curve_samples = 256);

/// Write-then-rename so concurrent workers never expose partial files.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace fuelopt

#endif
