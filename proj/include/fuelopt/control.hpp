#ifndef FUELOPT_CONTROL_HPP
#define FUELOPT_CONTROL_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace fuelopt {

/// Piecewise-constant admissible control on [0, T], |u(t)| <= 1.
/// Stored as breakpoints t_0 = 0 < ... < t_K = T and one m-vector per
/// interval. A sampled-grid control and a switching-time control share the
/// representation; `from_switches` tags the latter for reporting.
class ControlSignal {
public:
    ControlSignal() = default;
    ControlSignal(Eigen::VectorXd breakpoints, Eigen::MatrixXd values,
                  bool from_switches = false);

    static ControlSignal zero(int m, double T);

    double horizon() const {
        return breakpoints_.size() ? breakpoints_(breakpoints_.size() - 1) : 0.0;
    }
    int m() const { return static_cast<int>(values_.rows()); }
    int intervals() const { return static_cast<int>(values_.cols()); }
    const Eigen::VectorXd& breakpoints() const { return breakpoints_; }
    const Eigen::MatrixXd& values() const { return values_; }
    bool from_switches() const { return from_switches_; }

    /// u(t); right-continuous, clamped to the horizon.
    Eigen::VectorXd value(double t) const;

    /// Integral of |u(t)| dt, exact for the piecewise-constant representation
    /// and additive over concatenation.
    double cost() const;

    /// Appends another control after this one (times shifted).
    ControlSignal concat(const ControlSignal& tail) const;

private:
    Eigen::VectorXd breakpoints_;
    Eigen::MatrixXd values_;  // m x K
    bool from_switches_ = false;
};

/// Time grid plus states x(t_k).
struct Trajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd states;  // n x (K+1)
};

}  // namespace fuelopt

#endif
