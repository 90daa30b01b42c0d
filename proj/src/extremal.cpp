#include "fuelopt/extremal.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <utility>
#include <vector>

namespace fuelopt {

namespace {

// e^{dt A} and G(dt) = int_0^dt e^{sA} ds from one augmented exponential.
std::pair<MatrixXd, MatrixXd> step_matrices(const MatrixXd& A, double dt) {
    const int n = static_cast<int>(A.rows());
    MatrixXd aug = MatrixXd::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = dt * A;
    aug.topRightCorner(n, n) = dt * MatrixXd::Identity(n, n);
    const MatrixXd E = aug.exp();
    return {E.topLeftCorner(n, n), E.topRightCorner(n, n)};
}

// Small cache keyed on the exact interval length; grids are mostly uniform.
class StepCache {
public:
    explicit StepCache(const MatrixXd& A) : A_(A) {}
    const std::pair<MatrixXd, MatrixXd>& get(double dt) {
        for (const auto& e : entries_) {
            if (e.first == dt) return e.second;
        }
        entries_.emplace_back(dt, step_matrices(A_, dt));
        return entries_.back().second;
    }

private:
    const MatrixXd& A_;
    std::vector<std::pair<double, std::pair<MatrixXd, MatrixXd>>> entries_;
};

}  // namespace

RowVectorXd switching_vector(const LtiSystem& sys, const Covector& cov, double t) {
    const MatrixXd E = (-t * sys.A()).exp();
    return cov.p0 * E * sys.B();
}

ExtremalControl extremal_control(const LtiSystem& sys, const Covector& cov,
                                 const VectorXd& grid) {
    const int K = static_cast<int>(grid.size()) - 1;
    if (K < 1) throw std::invalid_argument("extremal_control: need >= 2 grid nodes");
    for (int i = 0; i < K; ++i) {
        if (!(grid(i) < grid(i + 1))) {
            throw std::invalid_argument("extremal_control: grid not increasing");
        }
    }
    const bool abnormal = cov.mode == ExtremalMode::Abnormal;
    if (abnormal && cov.p0.norm() == 0.0) {
        throw std::invalid_argument("extremal_control: abnormal covector must be nonzero");
    }

    const int m = sys.m();
    Eigen::MatrixXd vals(m, K);
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < K; ++k) {
        const double tm = 0.5 * (grid(k) + grid(k + 1));
        const RowVectorXd f = switching_vector(sys, cov, tm);
        const double nf = f.norm();
        if (abnormal) {
            vals.col(k) = (nf > 0) ? VectorXd(f.transpose() / nf)
                                   : VectorXd(VectorXd::Zero(m));
        } else {
            vals.col(k) = (nf > 1.0) ? VectorXd(f.transpose() / nf)
                                     : VectorXd(VectorXd::Zero(m));
        }
        sum += nf;
        sumsq += nf * nf;
    }
    ExtremalControl out{ControlSignal(grid, std::move(vals)), false};
    if (!abnormal) {
        const double mean = sum / K;
        const double var = std::max(0.0, sumsq / K - mean * mean);
        out.singular_arc = var < 1e-12 && std::abs(mean - 1.0) <= 1e-9;
    }
    return out;
}

ExtremalControl extremal_control_refined(const LtiSystem& sys, const Covector& cov,
                                         double T, int scan_nodes) {
    if (sys.m() != 1) {
        // Direction varies continuously inside an arc for m >= 2; the
        // switching-time representation only applies to scalar control.
        VectorXd grid = VectorXd::LinSpaced(scan_nodes + 1, 0.0, T);
        return extremal_control(sys, cov, grid);
    }
    const bool abnormal = cov.mode == ExtremalMode::Abnormal;
    if (abnormal && cov.p0.norm() == 0.0) {
        throw std::invalid_argument("extremal_control: abnormal covector must be nonzero");
    }
    auto f = [&](double t) { return switching_vector(sys, cov, t)(0); };
    auto region = [&](double fv) -> int {
        if (abnormal) return (fv > 0) ? 1 : (fv < 0 ? -1 : 0);
        if (fv > 1.0) return 1;
        if (fv < -1.0) return -1;
        return 0;
    };
    const double dt = T / scan_nodes;
    std::vector<double> bp{0.0};
    std::vector<double> arcval;
    double tprev = 0.5 * dt;
    int rprev = region(f(tprev));
    arcval.push_back(static_cast<double>(rprev));
    for (int k = 1; k < scan_nodes; ++k) {
        const double tk = (k + 0.5) * dt;
        const int rk = region(f(tk));
        if (rk != rprev) {
            // Bisect the boundary that separates the two regions.
            double target = 0.0;  // abnormal: f = 0
            if (!abnormal) target = (rprev == 1 || rk == 1) ? 1.0 : -1.0;
            double lo = tprev, hi = tk;
            while (hi - lo > 1e-12 * std::max(1.0, T)) {
                const double mid = 0.5 * (lo + hi);
                const int rm = region(f(mid));
                (void)target;
                if (rm == rprev) lo = mid;
                else hi = mid;
            }
            bp.push_back(0.5 * (lo + hi));
            arcval.push_back(static_cast<double>(rk));
            rprev = rk;
        }
        tprev = tk;
    }
    bp.push_back(T);
    Eigen::VectorXd breakpoints =
        Eigen::Map<Eigen::VectorXd>(bp.data(), static_cast<long>(bp.size()));
    Eigen::MatrixXd vals(1, static_cast<long>(arcval.size()));
    for (size_t i = 0; i < arcval.size(); ++i) vals(0, static_cast<long>(i)) = arcval[i];
    ExtremalControl out{ControlSignal(breakpoints, vals, true), false};
    if (!abnormal) {
        // Grid-based singular detection, same rule as the sampled variant.
        double sum = 0.0, sumsq = 0.0;
        for (int k = 0; k < scan_nodes; ++k) {
            const double nf = std::abs(f((k + 0.5) * dt));
            sum += nf;
            sumsq += nf * nf;
        }
        const double mean = sum / scan_nodes;
        const double var = std::max(0.0, sumsq / scan_nodes - mean * mean);
        out.singular_arc = var < 1e-12 && std::abs(mean - 1.0) <= 1e-9;
    }
    return out;
}

Trajectory integrate(const LtiSystem& sys, const VectorXd& x_anchor, Anchor anchor,
                     const ControlSignal& u) {
    const int K = u.intervals();
    const int n = sys.n();
    if (x_anchor.size() != n) throw std::invalid_argument("integrate: bad anchor size");
    Trajectory traj;
    traj.times = u.breakpoints();
    traj.states.resize(n, K + 1);
    if (anchor == Anchor::Initial) {
        StepCache cache(sys.A());
        traj.states.col(0) = x_anchor;
        for (int k = 0; k < K; ++k) {
            const double dt = traj.times(k + 1) - traj.times(k);
            const auto& [E, G] = cache.get(dt);
            traj.states.col(k + 1) =
                E * traj.states.col(k) + G * (sys.B() * u.values().col(k));
        }
    } else {
        const MatrixXd Aneg = -sys.A();
        StepCache cache(Aneg);
        traj.states.col(K) = x_anchor;
        for (int k = K - 1; k >= 0; --k) {
            const double dt = traj.times(k + 1) - traj.times(k);
            const auto& [E, G] = cache.get(dt);
            // x_k = e^{-dt A} x_{k+1} - int_0^dt e^{-s A} ds B u_k
            traj.states.col(k) =
                E * traj.states.col(k + 1) - G * (sys.B() * u.values().col(k));
        }
    }
    return traj;
}

double cost_l1(const ControlSignal& u) { return u.cost(); }

PmpResiduals pmp_residuals(const LtiSystem& sys, const VectorXd& x0,
                           const ControlSignal& u, const Covector& cov, double T,
                           bool freetime, double tau_max) {
    PmpResiduals res;
    const Trajectory traj = integrate(sys, x0, Anchor::Initial, u);
    res.terminal_miss = traj.states.col(traj.states.cols() - 1).norm();

    const bool abnormal = cov.mode == ExtremalMode::Abnormal;
    double gap = 0.0;
    for (int k = 0; k < u.intervals(); ++k) {
        const double tm = 0.5 * (u.breakpoints()(k) + u.breakpoints()(k + 1));
        const RowVectorXd f = switching_vector(sys, cov, tm);
        const VectorXd uk = u.values().col(k);
        const double nf = f.norm();
        double hmax, hact;
        if (abnormal) {
            hmax = nf;
            hact = f * uk;
        } else {
            hmax = std::max(nf - 1.0, 0.0);
            hact = f * uk - uk.norm();
        }
        gap = std::max(gap, hmax - hact);
    }
    res.maximality_gap = gap;

    if (freetime) {
        res.freetime_checked = true;
        const RowVectorXd pT = cov.p0 * (-T * sys.A()).exp();
        res.terminal_switch = std::abs((pT * sys.B()).norm() - 1.0);
        const int nodes = 2048;
        double excess = 0.0;
        for (int i = 0; i <= nodes; ++i) {
            const double tau = tau_max * i / nodes;
            const double v = (pT * (-tau * sys.A()).exp() * sys.B()).norm();
            excess = std::max(excess, v - 1.0);
        }
        res.tail_excess = excess;
    }
    return res;
}

}  // namespace fuelopt
