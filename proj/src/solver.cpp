#include "fuelopt/solver.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace fuelopt {

namespace {

struct Discretization {
    MatrixXd M;   // n x (N*m), block k maps u_k to its reachability increment
    VectorXd b;   // -x0
    double dt = 0.0;
    int N = 0;
    int m = 0;
};

Discretization discretize(const LtiSystem& sys, double T, const VectorXd& x0,
                          int N) {
    Discretization d;
    d.N = N;
    d.m = sys.m();
    d.dt = T / N;
    d.b = -x0;
    d.M.resize(sys.n(), N * d.m);
    const MatrixXd step = (-d.dt * sys.A()).exp();
    MatrixXd Ek = (-0.5 * d.dt * sys.A()).exp();
    for (int k = 0; k < N; ++k) {
        if (k > 0) {
            if ((k & 255) == 0) {
                Ek = (-(k + 0.5) * d.dt * sys.A()).exp();
            } else {
                Ek = step * Ek;
            }
        }
        d.M.middleCols(k * d.m, d.m) = Ek * sys.B() * d.dt;
    }
    return d;
}

struct PdhgResult {
    MatrixXd u;  // m x N
    VectorXd y;  // dual of the equality constraint; p0 = -y^T
    double gap = 0.0;
    double feas = 0.0;
    long iterations = 0;
    bool converged = false;
    bool infeasible = false;  // dual value exceeded the cost ceiling T
};

double block_norm(const VectorXd& v, int k, int m) {
    return v.segment(k * m, m).norm();
}

// Primal objective, dual objective, and equality residual.
void merit(const Discretization& d, const VectorXd& u, const VectorXd& y,
           double* primal, double* dual, double* feas) {
    const double c = d.dt;
    double P = 0.0;
    for (int k = 0; k < d.N; ++k) P += block_norm(u, k, d.m);
    P *= c;
    const VectorXd w = d.M.transpose() * y;
    double D = -d.b.dot(y);
    for (int k = 0; k < d.N; ++k) {
        D -= std::max(block_norm(w, k, d.m) - c, 0.0);
    }
    *primal = P;
    *dual = D;
    *feas = (d.M * u - d.b).norm();
}

// Bang/off primal guess from a dual point.
VectorXd primal_from_dual(const Discretization& d, const VectorXd& y) {
    const VectorXd w = d.M.transpose() * y;
    VectorXd u = VectorXd::Zero(d.N * d.m);
    for (int k = 0; k < d.N; ++k) {
        const double nw = block_norm(w, k, d.m);
        if (nw > d.dt) u.segment(k * d.m, d.m) = -w.segment(k * d.m, d.m) / nw;
    }
    return u;
}

// Snaps the primal to the bang/off pattern the dual suggests and fits the
// near-boundary blocks by bounded least squares. Closes the last decade of
// duality gap that plain iterates approach only sublinearly on degenerate
// instances.
// Exact minimizer of sum_j |alpha_j| subject to G alpha = r, |alpha_j| <= 1.
// Two-phase bounded-variable simplex with Bland's rule on the split form
// alpha = a+ - a-; the instance is tiny (rows = n, cols ~ window size).
std::optional<VectorXd> small_l1_fit(const MatrixXd& G, const VectorXd& r,
                                     VectorXd* dual_out = nullptr) {
    const int n = static_cast<int>(G.rows());
    const int q = static_cast<int>(G.cols());
    const int nv = 2 * q + n;  // a+, a-, artificials
    MatrixXd A(n, nv);
    A.leftCols(q) = G;
    A.middleCols(q, q) = -G;
    A.rightCols(n).setZero();
    for (int i = 0; i < n; ++i) A(i, 2 * q + i) = r(i) >= 0.0 ? 1.0 : -1.0;
    VectorXd ub = VectorXd::Ones(nv);
    ub.tail(n).setConstant(std::numeric_limits<double>::infinity());

    std::vector<int> basis(n);
    for (int i = 0; i < n; ++i) basis[i] = 2 * q + i;
    std::vector<int> at_upper(nv, 0);
    VectorXd x = VectorXd::Zero(nv);
    for (int i = 0; i < n; ++i) x(2 * q + i) = std::abs(r(i));

    const double eps = 1e-11;
    for (int phase = 1; phase <= 2; ++phase) {
        VectorXd cost = VectorXd::Zero(nv);
        if (phase == 1) {
            cost.tail(n).setOnes();
        } else {
            cost.head(2 * q).setOnes();
        }
        const int max_pivots = 20 * nv + 200;
        for (int iter = 0; iter < max_pivots; ++iter) {
            MatrixXd Ab(n, n);
            for (int i = 0; i < n; ++i) Ab.col(i) = A.col(basis[i]);
            Eigen::PartialPivLU<MatrixXd> lu(Ab);
            VectorXd cb(n);
            for (int i = 0; i < n; ++i) cb(i) = cost(basis[i]);
            const VectorXd yv = lu.transpose().solve(cb);
            if (dual_out && phase == 2) *dual_out = yv;
            // Dantzig pricing with a switch to Bland's rule against cycling.
            const bool bland = iter > nv;
            int enter = -1, dir = 0;
            double best_dj = eps;
            for (int j = 0; j < nv; ++j) {
                bool inbasis = false;
                for (int i = 0; i < n; ++i) inbasis |= basis[i] == j;
                if (inbasis) continue;
                const double dj = cost(j) - yv.dot(A.col(j));
                const double score = at_upper[j] ? dj : -dj;
                if (score > best_dj) {
                    enter = j;
                    dir = at_upper[j] ? -1 : 1;
                    if (bland) break;
                    best_dj = score;
                }
            }
            if (enter < 0) break;
            const VectorXd dcol = lu.solve(A.col(enter)) * dir;
            // Ratio test against both bounds of the basic variables and the
            // entering variable's own span.
            double step = ub(enter) < 1e29 ? ub(enter) : 1e30;
            int leave = -1, leave_to_upper = 0;
            for (int i = 0; i < n; ++i) {
                const double xi = x(basis[i]);
                if (dcol(i) > eps) {
                    const double s = xi / dcol(i);
                    if (s < step - eps || (s < step + eps && leave >= 0 &&
                                           basis[i] < basis[leave])) {
                        step = s;
                        leave = i;
                        leave_to_upper = 0;
                    }
                } else if (dcol(i) < -eps && ub(basis[i]) < 1e29) {
                    const double s = (ub(basis[i]) - xi) / (-dcol(i));
                    if (s < step - eps || (s < step + eps && leave >= 0 &&
                                           basis[i] < basis[leave])) {
                        step = s;
                        leave = i;
                        leave_to_upper = 1;
                    }
                }
            }
            if (step >= 1e29) return std::nullopt;  // unbounded, should not happen
            for (int i = 0; i < n; ++i) x(basis[i]) -= step * dcol(i);
            x(enter) += dir * step;
            if (leave < 0) {
                at_upper[enter] = !at_upper[enter];  // bound flip
            } else {
                const int out = basis[leave];
                at_upper[out] = leave_to_upper;
                x(out) = leave_to_upper ? ub(out) : 0.0;
                basis[leave] = enter;
                at_upper[enter] = 0;
            }
        }
        if (phase == 1) {
            double art = 0.0;
            for (int i = 0; i < n; ++i) art += x(2 * q + i);
            if (art > 1e-9 * (1.0 + r.norm())) return std::nullopt;  // infeasible
            ub.tail(n).setZero();  // pin the artificials for phase 2
        }
    }
    VectorXd alpha(q);
    for (int j = 0; j < q; ++j) alpha(j) = x(j) - x(q + j);
    return alpha;
}

double dual_value(const Discretization& d, const VectorXd& y) {
    const double c = d.dt;
    const VectorXd w = d.M.transpose() * y;
    double D = -d.b.dot(y);
    for (int k = 0; k < d.N; ++k) {
        D -= std::max(block_norm(w, k, d.m) - c, 0.0);
    }
    return D;
}

bool round_from_dual(const Discretization& d, const VectorXd& y, double Dval,
                     double feas_tol, double gap_tol, VectorXd* out,
                     VectorXd* y_out, double* gap_out, double* feas_out) {
    const double c = d.dt;
    const VectorXd w = d.M.transpose() * y;
    for (double rel : {1e-9, 1e-6, 1e-4, 1e-3, 1e-2}) {
        const double theta = rel * std::max(c, 1e-300);
        VectorXd u = VectorXd::Zero(d.N * d.m);
        std::vector<int> bdry;
        for (int k = 0; k < d.N; ++k) {
            const double nw = block_norm(w, k, d.m);
            const double margin = nw - c;
            if (margin > theta) {
                u.segment(k * d.m, d.m) = -w.segment(k * d.m, d.m) / nw;
            } else if (std::abs(margin) <= theta && nw > 0.0) {
                bdry.push_back(k);
            }
        }
        if (static_cast<int>(bdry.size()) > 8 * static_cast<int>(d.b.size()) + 8) {
            continue;
        }
        const VectorXd r0 = d.b - d.M * u;
        // Bounded least squares on the boundary magnitudes; the columns are
        // nearly parallel (adjacent grid nodes), so use an active-set solve
        // rather than coordinate descent.
        const int q = static_cast<int>(bdry.size());
        MatrixXd G(d.b.size(), q);
        for (int j = 0; j < q; ++j) {
            const int k = bdry[j];
            G.col(j) = d.M.middleCols(k * d.m, d.m) *
                       (-w.segment(k * d.m, d.m) / block_norm(w, k, d.m));
        }
        // Degenerate blocks can sit on either side of the axis, so the
        // magnitudes live in [-1, 1]; the fit must minimize the L1 cost of
        // the window, not its L2 norm.
        const auto fit = small_l1_fit(G, r0);
        if (!fit) continue;
        const VectorXd& alpha = *fit;
        for (int j = 0; j < q; ++j) {
            const int k = bdry[j];
            u.segment(k * d.m, d.m) =
                -alpha(j) * w.segment(k * d.m, d.m) / block_norm(w, k, d.m);
        }
        double P = 0.0;
        for (int k = 0; k < d.N; ++k) P += block_norm(u, k, d.m);
        P *= c;
        const double feas = (d.M * u - d.b).norm();
        if (feas > feas_tol) continue;
        // The fractional blocks pin the optimal dual exactly:
        // M_k^T y = -c u_k / |u_k| on each of them. Refit y from that basis;
        // the iterate's own dual trails the primal by orders of magnitude.
        VectorXd ybest = y;
        double D = Dval;
        {
            std::vector<int> fracs;
            for (int j = 0; j < q; ++j) {
                const double a = std::abs(alpha(j));
                if (a > 1e-9 && a < 1.0 - 1e-9) fracs.push_back(bdry[j]);
            }
            if (fracs.empty()) {
                for (int j = 0; j < q; ++j) {
                    if (std::abs(alpha(j)) > 1e-9) fracs.push_back(bdry[j]);
                }
            }
            if (!fracs.empty()) {
                const int n = static_cast<int>(d.b.size());
                MatrixXd Af(static_cast<int>(fracs.size()) * d.m, n);
                VectorXd rhs(static_cast<int>(fracs.size()) * d.m);
                for (size_t j = 0; j < fracs.size(); ++j) {
                    const int k = fracs[j];
                    Af.middleRows(static_cast<int>(j) * d.m, d.m) =
                        d.M.middleCols(k * d.m, d.m).transpose();
                    rhs.segment(static_cast<int>(j) * d.m, d.m) =
                        -c * u.segment(k * d.m, d.m) /
                        block_norm(u, k, d.m);
                }
                const VectorXd yr =
                    Af.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                        .setThreshold(1e-12)
                        .solve(rhs);
                const double Dr = dual_value(d, yr);
                if (Dr > D) {
                    D = Dr;
                    ybest = yr;
                }
            }
        }
        const double gap = std::abs(P - D);
        if (gap <= gap_tol) {
            *out = u;
            *y_out = ybest;
            *gap_out = gap;
            *feas_out = feas;
            return true;
        }
    }
    return false;
}

// Restarted primal-dual hybrid gradient on
//   min sum_k dt |u_k|  s.t.  M u = b,  |u_k| <= 1.
PdhgResult pdhg_solve(const Discretization& d, double gap_tol, double feas_tol,
                      long max_iters, const VectorXd& warm_dual) {
    const int n = static_cast<int>(d.b.size());
    const int nv = d.N * d.m;
    const double c = d.dt;

    // Diagonal preconditioning (per primal block, per dual row); the column
    // norms of M span many decades for stiff dynamics and a single scalar
    // step stalls badly there.
    const MatrixXd Mabs = d.M.cwiseAbs();
    VectorXd tau(d.N);
    for (int k = 0; k < d.N; ++k) {
        tau(k) = 1.0 / std::max(Mabs.middleCols(k * d.m, d.m).sum(), 1e-300);
    }
    VectorXd sig(n);
    for (int i = 0; i < n; ++i) {
        sig(i) = 1.0 / std::max(Mabs.row(i).sum(), 1e-300);
    }

    VectorXd u = VectorXd::Zero(nv);
    VectorXd y = VectorXd::Zero(n);
    if (warm_dual.size() == n) {
        y = warm_dual;
        u = primal_from_dual(d, y);
    }
    VectorXd usum = VectorXd::Zero(nv), ysum = VectorXd::Zero(n);
    long navg = 0;
    double last_restart_merit = std::numeric_limits<double>::infinity();

    PdhgResult res;
    res.gap = std::numeric_limits<double>::infinity();
    const double bscale = 1.0 + d.b.norm();
    double prev_mbest = std::numeric_limits<double>::infinity();
    int slow_checks = 0, crossover_cooldown = 0;
    VectorXd v(nv), w(nv);
    long it = 0;
    const int check_every = 250;
    while (it < max_iters) {
        for (int s = 0; s < check_every; ++s) {
            v.noalias() = d.M.transpose() * y;
            // Radial prox: shrink by tau*c, then project into the unit ball.
            for (int k = 0; k < d.N; ++k) {
                v.segment(k * d.m, d.m) =
                    u.segment(k * d.m, d.m) - tau(k) * v.segment(k * d.m, d.m);
                const double nvk = block_norm(v, k, d.m);
                const double target = std::min(std::max(nvk - tau(k) * c, 0.0), 1.0);
                if (nvk > 0.0) {
                    v.segment(k * d.m, d.m) *= target / nvk;
                }
            }
            w.noalias() = 2.0 * v - u;
            u.swap(v);
            y.noalias() += sig.cwiseProduct(d.M * w - d.b);
            usum += u;
            ysum += y;
            ++navg;
            ++it;
        }
        double P, D, feas, Pa, Da, fa;
        merit(d, u, y, &P, &D, &feas);
        const VectorXd ua = usum / navg, ya = ysum / navg;
        merit(d, ua, ya, &Pa, &Da, &fa);
        const double mcur = std::max(feas / bscale, std::abs(P - D));
        const double mavg = std::max(fa / bscale, std::abs(Pa - Da));
        double mbest = mcur;
        if (mavg < mcur) {
            u = ua;
            y = ya;
            P = Pa;
            D = Da;
            feas = fa;
            mbest = mavg;
        }
        if (mbest < 0.2 * last_restart_merit) {
            usum.setZero();
            ysum.setZero();
            navg = 0;
            last_restart_merit = mbest;
        }
        res.gap = std::abs(P - D);
        res.feas = feas;
        res.iterations = it;
        if (feas <= feas_tol && res.gap <= gap_tol) {
            res.converged = true;
            break;
        }
        // Weak duality: every feasible control costs at most c N = T, so a
        // dual value beyond that certifies the discretized target unreachable.
        if (std::max(D, Da) > c * d.N + 1.0) {
            res.y = D >= Da ? y : ya;
            res.infeasible = true;
            return res;
        }
        VectorXd ur, yr;
        double gr, fr;
        if (round_from_dual(d, y, D, feas_tol, gap_tol, &ur, &yr, &gr, &fr)) {
            u = ur;
            y = yr;
            res.gap = gr;
            res.feas = fr;
            res.converged = true;
            break;
        }
        if (mbest > 0.5 * prev_mbest) {
            ++slow_checks;
        } else {
            slow_checks = 0;
        }
        prev_mbest = mbest;
        // Dual-degenerate instances leave the iterates in a flat valley no
        // first-order step can cross; for m = 1 the program is an LP, so
        // finish it by a simplex crossover.
        if (d.m == 1 && crossover_cooldown == 0 &&
            (slow_checks >= 4 || it >= 200000)) {
            VectorXd ycross;
            const auto cross = small_l1_fit(d.M, d.b, &ycross);
            if (cross) {
                const VectorXd& uc = *cross;
                double Pc = 0.0;
                for (int k = 0; k < d.N; ++k) Pc += std::abs(uc(k));
                Pc *= c;
                const double fc = (d.M * uc - d.b).norm();
                const VectorXd yfix = -c * ycross;
                const double gc = std::abs(Pc - dual_value(d, yfix));
                if (fc <= feas_tol && gc <= gap_tol) {
                    u = uc;
                    y = yfix;
                    res.gap = gc;
                    res.feas = fc;
                    res.converged = true;
                    break;
                }
            }
            crossover_cooldown = 100;
        }
        if (crossover_cooldown > 0) --crossover_cooldown;
    }
    res.u.resize(d.m, d.N);
    for (int k = 0; k < d.N; ++k) {
        VectorXd uk = u.segment(k * d.m, d.m);
        const double nk = uk.norm();
        if (nk > 1.0) uk /= nk;
        res.u.col(k) = uk;
    }
    res.y = y;
    return res;
}

double terminal_miss(const LtiSystem& sys, const VectorXd& x0,
                     const ControlSignal& u) {
    const Trajectory traj = integrate(sys, x0, Anchor::Initial, u);
    return traj.states.col(traj.states.cols() - 1).norm();
}

struct ShootResult {
    RowVectorXd p0;
    double miss = std::numeric_limits<double>::infinity();
    bool ok = false;
};

// Damped Newton on the covector with a truncated-SVD pseudo-inverse step;
// the Jacobian is finite-difference. Degenerate directions (non-unique
// optima) are handled by the pseudo-inverse.
ShootResult newton_shoot(const LtiSystem& sys, double T, const VectorXd& x0,
                         const RowVectorXd& p0_init, int scan_nodes) {
    const int n = sys.n();
    auto shoot = [&](const RowVectorXd& p) -> VectorXd {
        Covector cov{p, ExtremalMode::Normal};
        const ExtremalControl ec = extremal_control_refined(sys, cov, T, scan_nodes);
        const Trajectory traj = integrate(sys, x0, Anchor::Initial, ec.u);
        return traj.states.col(traj.states.cols() - 1);
    };
    ShootResult out;
    RowVectorXd p = p0_init;
    VectorXd F = shoot(p);
    out.p0 = p;
    out.miss = F.norm();
    const double tol = 1e-8 * (1.0 + x0.norm());
    for (int iter = 0; iter < 40 && out.miss > tol; ++iter) {
        MatrixXd J(n, n);
        const double eps = 1e-6 * (1.0 + p.norm());
        for (int j = 0; j < n; ++j) {
            RowVectorXd pj = p;
            pj(j) += eps;
            J.col(j) = (shoot(pj) - F) / eps;
        }
        Eigen::JacobiSVD<MatrixXd> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
        VectorXd sv = svd.singularValues();
        const double cutoff = std::max(sv(0) * 1e-10, 1e-300);
        VectorXd inv = sv;
        for (int i = 0; i < n; ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
        const VectorXd step =
            -(svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * F);
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 12; ++ls) {
            RowVectorXd pn = p + lambda * step.transpose();
            const VectorXd Fn = shoot(pn);
            if (Fn.norm() < out.miss) {
                p = pn;
                F = Fn;
                out.miss = Fn.norm();
                out.p0 = p;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }
    out.ok = out.miss <= tol;
    return out;
}

SolveReport trivial_report(const LtiSystem& sys, double T) {
    SolveReport rep;
    rep.cost = 0.0;
    rep.control = T > 0 ? ControlSignal::zero(sys.m(), T) : ControlSignal();
    rep.mode = SolveMode::Normal;
    rep.horizon_used = T;
    rep.duality_gap = 0.0;
    return rep;
}

}  // namespace

SolveReport solve_finite(const LtiSystem& sys, double T, const VectorXd& x0,
                         const SolveOptions& opts) {
    if (!(T > 0.0)) throw std::invalid_argument("solve_finite: T must be positive");
    if (x0.size() != sys.n()) throw std::invalid_argument("solve_finite: bad x0 size");
    if (x0.norm() == 0.0) return trivial_report(sys, T);

    const MemberResult mr = member(sys, T, x0, opts.member_tol, opts.member_dirs,
                                   opts.member_quad);
    if (mr.cls == Membership::Outside) {
        SolveReport rep;
        rep.mode = SolveMode::Infeasible;
        rep.horizon_used = T;
        return rep;
    }

    const Discretization d = discretize(sys, T, x0, opts.N);
    const double gap_tol = opts.gap_tol_scale * (1.0 + T);
    const double feas_tol = opts.feas_tol_scale * (1.0 + x0.norm());
    PdhgResult pd = pdhg_solve(d, gap_tol, feas_tol, opts.max_iters, opts.warm_dual);
    if (pd.infeasible) {
        // The dual certificate also separates: confirm against the support
        // function in the certifying direction. The coarse membership grid
        // can misread thin attainable sets near their boundary.
        const RowVectorXd xi = pd.y.transpose() / pd.y.norm();
        SupportQuery q;
        q.sys = &sys;
        q.T = T;
        q.direction = xi;
        q.quad_steps = opts.member_quad;
        const double tol =
            opts.member_tol > 0.0 ? opts.member_tol : 1e-6 * (1.0 + x0.norm());
        if (xi.dot(x0) - support(q) > -tol) {
            SolveReport rep;
            rep.mode = SolveMode::Infeasible;
            rep.horizon_used = T;
            return rep;
        }
        throw NumericFailure("solve_finite: dual divergence without certificate",
                             pd.gap);
    }
    if (!pd.converged) {
        throw NumericFailure("solve_finite: primal-dual iteration cap reached", pd.gap);
    }

    SolveReport rep;
    rep.mode = SolveMode::Normal;
    rep.horizon_used = T;
    rep.duality_gap = pd.gap;
    rep.iterations = pd.iterations;
    rep.control = ControlSignal(VectorXd::LinSpaced(opts.N + 1, 0.0, T), pd.u);
    rep.cost = rep.control.cost();
    Covector cov{-pd.y.transpose(), ExtremalMode::Normal};
    rep.covector = cov;

    if (opts.polish) {
        const ShootResult sr = newton_shoot(sys, T, x0, cov.p0, opts.N);
        bool accepted = false;
        if (sr.ok) {
            Covector pc{sr.p0, ExtremalMode::Normal};
            const ExtremalControl ec = extremal_control_refined(sys, pc, T, opts.N);
            const double pcost = ec.u.cost();
            // Guard against convergence to an unrelated extremal.
            if (std::abs(pcost - rep.cost) <= 1e-3 * (1.0 + rep.cost)) {
                rep.control = ec.u;
                rep.cost = pcost;
                rep.covector = pc;
                rep.singular_arc = ec.singular_arc;
                accepted = true;
            }
        }
        rep.polish_skipped = !accepted;
    } else {
        rep.polish_skipped = true;
    }
    rep.residuals = pmp_residuals(sys, x0, rep.control, *rep.covector, T);
    return rep;
}

MinTimeResult solve_time_optimal(const LtiSystem& sys, const VectorXd& x0,
                                 const SolveOptions& opts) {
    MinTimeResult out;
    if (x0.size() != sys.n()) {
        throw std::invalid_argument("solve_time_optimal: bad x0 size");
    }
    if (x0.norm() == 0.0) {
        out.T_min = 0.0;
        out.report = trivial_report(sys, 0.0);
        out.report.mode = SolveMode::Abnormal;
        return out;
    }
    auto probe = [&](double T) {
        return member(sys, T, x0, opts.member_tol, opts.member_dirs,
                      opts.member_quad);
    };
    double hi = opts.probe_T0;
    int k = 0;
    while (probe(hi).cls == Membership::Outside) {
        hi *= 2.0;
        if (++k > opts.max_doublings) {
            throw NumericFailure("solve_time_optimal: unreachable within probe cap");
        }
    }
    double lo = k > 0 ? hi / 2.0 : 0.0;
    if (k == 0) {
        lo = hi / 2.0;
        int j = 0;
        while (probe(lo).cls != Membership::Outside && j++ < 60) lo /= 2.0;
        if (probe(lo).cls != Membership::Outside) lo = 0.0;
    }
    MemberResult boundary;
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        const MemberResult mr = probe(mid);
        if (mr.cls == Membership::Outside) {
            lo = mid;
        } else {
            hi = mid;
            boundary = mr;
        }
    }
    out.T_min = hi;
    if (boundary.best_dir.size() == 0) boundary = probe(hi);

    // Abnormal shooting: unknowns are the covector direction and the time.
    const int n = sys.n();
    auto shoot = [&](const RowVectorXd& p, double T) -> VectorXd {
        Covector cov{p, ExtremalMode::Abnormal};
        const ExtremalControl ec = extremal_control_refined(sys, cov, T, opts.N);
        const Trajectory traj = integrate(sys, x0, Anchor::Initial, ec.u);
        return traj.states.col(traj.states.cols() - 1);
    };
    RowVectorXd p = -boundary.best_dir;
    p.normalize();
    double T = out.T_min;
    VectorXd F = shoot(p, T);
    double miss = F.norm();
    const double tol = 1e-8 * (1.0 + x0.norm());
    for (int iter = 0; iter < 60 && miss > tol; ++iter) {
        MatrixXd J(n, n + 1);
        const double epsp = 1e-7;
        for (int j = 0; j < n; ++j) {
            RowVectorXd pj = p;
            pj(j) += epsp;
            pj.normalize();
            J.col(j) = (shoot(pj, T) - F) / epsp;
        }
        const double epst = 1e-7 * std::max(1.0, T);
        J.col(n) = (shoot(p, T + epst) - F) / epst;
        Eigen::JacobiSVD<MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        VectorXd sv = svd.singularValues();
        const double cutoff = std::max(sv(0) * 1e-10, 1e-300);
        VectorXd inv = sv;
        for (int i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
        const VectorXd step =
            -(svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * F);
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 14; ++ls) {
            RowVectorXd pn = p + lambda * step.head(n).transpose();
            pn.normalize();
            double Tn = std::max(T + lambda * step(n), 1e-9);
            const VectorXd Fn = shoot(pn, Tn);
            if (Fn.norm() < miss) {
                p = pn;
                T = Tn;
                F = Fn;
                miss = Fn.norm();
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }

    SolveReport rep;
    rep.mode = SolveMode::Abnormal;
    Covector cov{p, ExtremalMode::Abnormal};
    const ExtremalControl ec = extremal_control_refined(sys, cov, T, opts.N);
    rep.control = ec.u;
    rep.cost = rep.control.cost();
    rep.covector = cov;
    rep.horizon_used = T;
    rep.polish_skipped = miss > tol;
    rep.residuals = pmp_residuals(sys, x0, rep.control, cov, T);
    // The membership grid classifies boundary states "inside" slightly early,
    // so the bisected value can undershoot by the direction resolution. A
    // converged shooting time inside a small window around it is exact and
    // never below the certified lower bracket.
    if (!rep.polish_skipped && T >= lo - 1e-9 &&
        std::abs(T - out.T_min) <= 1e-2 * (1.0 + out.T_min)) {
        out.T_min = T;
    }
    out.report = rep;
    return out;
}

namespace {

// Last time |p(t) B| crosses 1 from above, refined by bisection.
double attainment_horizon(const LtiSystem& sys, const Covector& cov, double T,
                          const ControlSignal& u) {
    const int scan = 8192;
    auto mag = [&](double t) { return switching_vector(sys, cov, t).norm(); };
    double last = -1.0;
    double prev = mag(0.0);
    for (int k = 1; k <= scan; ++k) {
        const double t = T * k / scan;
        const double cur = mag(t);
        if (prev >= 1.0 && cur < 1.0) {
            double lo = T * (k - 1) / scan, hi = t;
            for (int i = 0; i < 80 && hi - lo > 1e-13 * std::max(1.0, T); ++i) {
                const double mid = 0.5 * (lo + hi);
                (mag(mid) >= 1.0 ? lo : hi) = mid;
            }
            last = 0.5 * (lo + hi);
        }
        prev = cur;
    }
    if (last > 0.0) return last;
    // Fallback: support of the control.
    for (int k = u.intervals() - 1; k >= 0; --k) {
        if (u.values().col(k).norm() > 1e-9) return u.breakpoints()(k + 1);
    }
    return T;
}

ControlSignal truncate_control(const ControlSignal& u, double T) {
    std::vector<double> bp{0.0};
    std::vector<int> keep;
    for (int k = 0; k < u.intervals(); ++k) {
        const double t1 = u.breakpoints()(k + 1);
        if (u.breakpoints()(k) >= T - 1e-15) break;
        keep.push_back(k);
        bp.push_back(std::min(t1, T));
    }
    if (bp.back() < T) bp.push_back(T);
    while (static_cast<int>(keep.size()) < static_cast<int>(bp.size()) - 1) {
        keep.push_back(-1);  // zero-padded tail
    }
    Eigen::VectorXd breaks =
        Eigen::Map<Eigen::VectorXd>(bp.data(), static_cast<long>(bp.size()));
    Eigen::MatrixXd vals(u.m(), static_cast<long>(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] >= 0) {
            vals.col(static_cast<long>(i)) = u.values().col(keep[i]);
        } else {
            vals.col(static_cast<long>(i)).setZero();
        }
    }
    return ControlSignal(breaks, vals, u.from_switches());
}

}  // namespace

SolveReport solve_infinite(const LtiSystem& sys, const VectorXd& x0,
                           const SolveOptions& opts) {
    if (x0.size() != sys.n()) throw std::invalid_argument("solve_infinite: bad x0 size");
    if (x0.norm() == 0.0) {
        SolveReport rep = trivial_report(sys, opts.probe_T0);
        rep.attained = true;
        return rep;
    }
    const HyperbolicSplit split = hyperbolic_split(sys.A());

    if (!split.is_hyperbolic) {
        // Numerical infimum estimate from a horizon sweep; the inf may be
        // unattained, so no certificate is produced.
        double T = opts.probe_T0;
        int k = 0;
        while (member(sys, T, x0, opts.member_tol, opts.member_dirs,
                      opts.member_quad).cls == Membership::Outside) {
            T *= 2.0;
            if (++k > opts.max_doublings) {
                SolveReport rep;
                rep.mode = SolveMode::Infeasible;
                return rep;
            }
        }
        SolveOptions o = opts;
        SolveReport best;
        bool have = false;
        for (int s = 0; s <= opts.sweep_doublings; ++s, T *= 2.0) {
            SolveReport r = solve_finite(sys, T, x0, o);
            if (r.mode == SolveMode::Infeasible) continue;
            if (r.covector) o.warm_dual = -r.covector->p0.transpose();
            const bool improved = !have || r.cost < best.cost;
            const double delta = have ? std::abs(r.cost - best.cost) : 1e300;
            if (improved) {
                best = r;
                have = true;
            }
            if (delta < 1e-6 * (1.0 + best.cost)) break;
        }
        if (!have) {
            SolveReport rep;
            rep.mode = SolveMode::Infeasible;
            return rep;
        }
        best.attained = false;
        return best;
    }

    // Hyperbolic: only the E+ component matters (B+ u = (Bu)+).
    const int kp = static_cast<int>(split.basis_plus.cols());
    if (kp == 0) {
        SolveReport rep = trivial_report(sys, opts.probe_T0);
        rep.attained = true;
        return rep;
    }
    const MatrixXd& Vp = split.basis_plus;
    const MatrixXd C =
        (Vp.transpose() * Vp).ldlt().solve(Vp.transpose() * split.projector_plus);
    const MatrixXd A_red = C * sys.A() * Vp;
    const MatrixXd B_red = C * sys.B();
    const LtiSystem red = LtiSystem::unchecked(A_red, B_red);
    const VectorXd x0_red = C * x0;
    if (x0_red.norm() <= 1e-14 * (1.0 + x0.norm())) {
        SolveReport rep = trivial_report(sys, opts.probe_T0);
        rep.attained = true;
        return rep;
    }

    double T = opts.probe_T0;
    int k = 0;
    while (member(red, T, x0_red, opts.member_tol, opts.member_dirs,
                  opts.member_quad).cls == Membership::Outside) {
        T *= 2.0;
        if (++k > opts.max_doublings) {
            SolveReport rep;
            rep.mode = SolveMode::Infeasible;
            return rep;
        }
    }

    SolveOptions o = opts;
    SolveReport prev, cur;
    bool have_prev = false, plateau = false;
    for (int s = 0; s <= opts.sweep_doublings; ++s, T *= 2.0) {
        cur = solve_finite(red, T, x0_red, o);
        if (cur.mode == SolveMode::Infeasible) continue;
        if (cur.covector) o.warm_dual = -cur.covector->p0.transpose();
        if (have_prev && std::abs(cur.cost - prev.cost) < 1e-7) {
            plateau = true;
            break;
        }
        prev = cur;
        have_prev = true;
    }
    if (!plateau) {
        throw NumericFailure("solve_infinite: no cost plateau located in the sweep");
    }

    const Covector& cov_red = *cur.covector;
    const double T_att =
        attainment_horizon(red, cov_red, cur.horizon_used, cur.control);
    SolveReport rep;
    rep.mode = SolveMode::Normal;
    rep.attained = true;
    rep.horizon_used = T_att;
    rep.control = truncate_control(cur.control, T_att);
    rep.cost = rep.control.cost();
    rep.polish_skipped = cur.polish_skipped;
    rep.singular_arc = cur.singular_arc;
    rep.duality_gap = cur.duality_gap;
    rep.iterations = cur.iterations;
    // Covector reported in the full state coordinates.
    Covector cov_full{cov_red.p0 * C, ExtremalMode::Normal};
    rep.covector = cov_full;
    const double tau_max = std::max(10.0, 10.0 / split.alpha);
    rep.residuals = pmp_residuals(red, x0_red, rep.control, cov_red, T_att,
                                  /*freetime=*/true, tau_max);
    return rep;
}

RobustnessResult robustness_probe(const LtiSystem& sys, double T,
                                  const VectorXd& x0, double delta,
                                  const SolveOptions& opts) {
    const SolveReport base = solve_finite(sys, T, x0, opts);
    if (base.mode == SolveMode::Infeasible) {
        throw std::invalid_argument("robustness_probe: x0 not inside the attainable set");
    }
    RobustnessResult out;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int probes = 8;
    const double anorm = std::max(sys.A().norm(), 1e-12);
    const double bnorm = std::max(sys.B().norm(), 1e-12);
    for (int p = 0; p < probes; ++p) {
        const double Tp = T * (1.0 + delta * unif(rng));
        VectorXd x0p = x0;
        for (int i = 0; i < x0p.size(); ++i) x0p(i) += delta * x0.norm() * unif(rng);
        MatrixXd Ap = sys.A(), Bp = sys.B();
        for (int i = 0; i < Ap.size(); ++i) Ap.data()[i] += delta * anorm * unif(rng);
        for (int i = 0; i < Bp.size(); ++i) Bp.data()[i] += delta * bnorm * unif(rng);
        const LtiSystem pert = LtiSystem::unchecked(Ap, Bp);
        const SolveReport r = solve_finite(pert, Tp, x0p, opts);
        if (r.mode == SolveMode::Infeasible) {
            ++out.infeasible_count;
            continue;
        }
        out.max_deviation = std::max(out.max_deviation, std::abs(r.cost - base.cost));
    }
    return out;
}

}  // namespace fuelopt
