#include "fuelopt/control.hpp"

#include <algorithm>

namespace fuelopt {

ControlSignal::ControlSignal(Eigen::VectorXd breakpoints, Eigen::MatrixXd values,
                             bool from_switches)
    : breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      from_switches_(from_switches) {
    if (breakpoints_.size() < 2 ||
        values_.cols() != breakpoints_.size() - 1) {
        throw std::invalid_argument("ControlSignal: breakpoints/values mismatch");
    }
    for (int i = 0; i + 1 < breakpoints_.size(); ++i) {
        if (!(breakpoints_(i) < breakpoints_(i + 1))) {
            throw std::invalid_argument("ControlSignal: breakpoints not increasing");
        }
    }
    for (int k = 0; k < values_.cols(); ++k) {
        if (values_.col(k).norm() > 1.0 + 1e-12) {
            throw std::invalid_argument("ControlSignal: |u| exceeds 1");
        }
    }
}

ControlSignal ControlSignal::zero(int m, double T) {
    Eigen::VectorXd bp(2);
    bp << 0.0, T;
    return ControlSignal(bp, Eigen::MatrixXd::Zero(m, 1));
}

Eigen::VectorXd ControlSignal::value(double t) const {
    const int K = intervals();
    if (t <= breakpoints_(0)) return values_.col(0);
    if (t >= breakpoints_(K)) return values_.col(K - 1);
    const double* beg = breakpoints_.data();
    const double* end = beg + breakpoints_.size();
    const int idx = static_cast<int>(std::upper_bound(beg, end, t) - beg) - 1;
    return values_.col(std::min(idx, K - 1));
}

double ControlSignal::cost() const {
    double c = 0.0;
    for (int k = 0; k < intervals(); ++k) {
        c += values_.col(k).norm() * (breakpoints_(k + 1) - breakpoints_(k));
    }
    return c;
}

ControlSignal ControlSignal::concat(const ControlSignal& tail) const {
    if (tail.m() != m()) throw std::invalid_argument("concat: dimension mismatch");
    const double T0 = horizon();
    Eigen::VectorXd bp(breakpoints_.size() + tail.breakpoints_.size() - 1);
    bp.head(breakpoints_.size()) = breakpoints_;
    for (int i = 1; i < tail.breakpoints_.size(); ++i) {
        bp(breakpoints_.size() + i - 1) = T0 + tail.breakpoints_(i);
    }
    Eigen::MatrixXd vals(m(), intervals() + tail.intervals());
    vals.leftCols(intervals()) = values_;
    vals.rightCols(tail.intervals()) = tail.values_;
    return ControlSignal(bp, vals, from_switches_ && tail.from_switches_);
}

}  // namespace fuelopt
