#include "fuelopt/reachability.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace fuelopt {

namespace {

// Moro's inverse normal CDF approximation, good to ~1e-9 in the bulk.
double inv_normal_cdf(double p) {
    static const double a[4] = {2.50662823884, -18.61500062529, 41.39119773534,
                                -25.44106049637};
    static const double b[4] = {-8.47351093090, 23.08336743743, -21.06224101826,
                                3.13082909833};
    static const double c[9] = {0.3374754822726147, 0.9761690190917186,
                                0.1607979714918209, 0.0276438810333863,
                                0.0038405729373609, 0.0003951896511919,
                                0.0000321767881768, 0.0000002888167364,
                                0.0000003960315187};
    const double y = p - 0.5;
    if (std::abs(y) < 0.42) {
        const double r = y * y;
        return y * (((a[3] * r + a[2]) * r + a[1]) * r + a[0]) /
               ((((b[3] * r + b[2]) * r + b[1]) * r + b[0]) * r + 1.0);
    }
    double r = (y > 0) ? 1.0 - p : p;
    r = std::log(-std::log(r));
    double x = c[0];
    double rk = 1.0;
    for (int k = 1; k < 9; ++k) {
        rk *= r;
        x += c[k] * rk;
    }
    return (y > 0) ? x : -x;
}

}  // namespace

MatrixXd sphere_directions(int n, int count) {
    MatrixXd dirs(count, n);
    if (n == 1) {
        for (int i = 0; i < count; ++i) dirs(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
        return dirs;
    }
    const double pi = std::numbers::pi;
    if (n == 2) {
        for (int i = 0; i < count; ++i) {
            const double th = 2.0 * pi * i / count;
            dirs(i, 0) = std::cos(th);
            dirs(i, 1) = std::sin(th);
        }
        return dirs;
    }
    if (n == 3) {
        // Fibonacci spiral covering.
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = 2.0 * pi * i / golden;
            dirs(i, 0) = r * std::cos(th);
            dirs(i, 1) = r * std::sin(th);
            dirs(i, 2) = z;
        }
        return dirs;
    }
    // Higher dimensions: additive golden-recurrence sequence mapped through
    // the inverse normal CDF, then normalized.
    // Generalized golden ratio for dimension n.
    double phi = 1.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (n + 1));
    VectorXd alpha(n);
    for (int j = 0; j < n; ++j) alpha(j) = std::pow(1.0 / phi, j + 1);
    for (int i = 0; i < count; ++i) {
        VectorXd v(n);
        for (int j = 0; j < n; ++j) {
            double f = std::fmod(0.5 + (i + 1) * alpha(j), 1.0);
            f = std::min(std::max(f, 1e-12), 1.0 - 1e-12);
            v(j) = inv_normal_cdf(f);
        }
        const double nv = v.norm();
        if (nv > 0) {
            dirs.row(i) = v.transpose() / nv;
        } else {
            dirs.row(i) = VectorXd::Unit(n, 0).transpose();
        }
    }
    return dirs;
}

double support(const SupportQuery& q) {
    if (q.sys == nullptr) throw std::invalid_argument("support: null system");
    if (!(q.tau >= 0.0) || !(q.tau < q.T)) {
        throw std::invalid_argument("support: need 0 <= tau < T");
    }
    if (q.direction.size() != q.sys->n() || q.direction.norm() == 0.0) {
        throw std::invalid_argument("support: direction must be nonzero n-vector");
    }
    if (q.quad_steps < 2) throw std::invalid_argument("support: quad_steps >= 2");

    const MatrixXd& A = q.sys->A();
    const MatrixXd& B = q.sys->B();
    const double dt = (q.T - q.tau) / q.quad_steps;
    const MatrixXd step = (-dt * A).exp();
    MatrixXd W = (-(q.tau + 0.5 * dt) * A).exp() * B;
    double acc = 0.0;
    for (int k = 0; k < q.quad_steps; ++k) {
        acc += (q.direction * W).norm();
        if ((k & 255) == 255) {
            W = (-(q.tau + (k + 1.5) * dt) * A).exp() * B;
        } else {
            W = step * W;
        }
    }
    return acc * dt;
}

MemberResult member(const LtiSystem& sys, double T, const VectorXd& x0,
                    double tol, int dirs, int quad_steps) {
    const int n = sys.n();
    if (x0.size() != n) throw std::invalid_argument("member: bad x0 size");
    if (dirs <= 0) dirs = 64 * n;
    if (dirs < 2 * n) dirs = 2 * n;
    if (tol < 0.0) tol = 1e-6 * (1.0 + x0.norm());

    // Shared quadrature table of e^{-tA}B at the midpoints.
    const double dt = T / quad_steps;
    const MatrixXd step = (-dt * sys.A()).exp();
    std::vector<MatrixXd> W(quad_steps);
    W[0] = (-0.5 * dt * sys.A()).exp() * sys.B();
    for (int k = 1; k < quad_steps; ++k) {
        if ((k & 255) == 0) {
            W[k] = (-(k + 0.5) * dt * sys.A()).exp() * sys.B();
        } else {
            W[k] = step * W[k - 1];
        }
    }

    const MatrixXd grid = sphere_directions(n, dirs);
    MemberResult res;
    res.max_gap = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < dirs; ++i) {
        const RowVectorXd xi = grid.row(i);
        double h = 0.0;
        for (int k = 0; k < quad_steps; ++k) h += (xi * W[k]).norm();
        h *= dt;
        const double gap = xi * x0 - h;
        if (gap > res.max_gap) {
            res.max_gap = gap;
            res.best_dir = xi;
        }
    }
    if (res.max_gap < -tol) {
        res.cls = Membership::Inside;
    } else if (res.max_gap > tol) {
        res.cls = Membership::Outside;
    } else {
        res.cls = Membership::Boundary;
    }
    return res;
}

}  // namespace fuelopt
