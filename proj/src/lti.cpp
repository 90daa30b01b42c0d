#include "fuelopt/lti.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace fuelopt {

bool kalman_rank_ok(const MatrixXd& A, const MatrixXd& B) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) {
        throw std::invalid_argument("kalman_rank_ok: shape mismatch");
    }
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    MatrixXd ctrb(n, n * m);
    MatrixXd blk = B;
    for (int i = 0; i < n; ++i) {
        ctrb.middleCols(i * m, m) = blk;
        blk = A * blk;
    }
    Eigen::JacobiSVD<MatrixXd> svd(ctrb);
    const VectorXd sv = svd.singularValues();
    const double thresh =
        n * std::numeric_limits<double>::epsilon() * sv(0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > thresh) ++rank;
    }
    return rank == n;
}

LtiSystem::LtiSystem(MatrixXd A, MatrixXd B) {
    if (A.rows() < 1 || A.rows() != A.cols()) {
        throw std::invalid_argument("LtiSystem: A must be square, n >= 1");
    }
    if (B.rows() != A.rows() || B.cols() < 1) {
        throw std::invalid_argument("LtiSystem: B must be n x m, m >= 1");
    }
    if (!A.allFinite() || !B.allFinite()) {
        throw std::invalid_argument("LtiSystem: non-finite entries");
    }
    if (!kalman_rank_ok(A, B)) {
        throw std::invalid_argument("LtiSystem: Kalman rank condition fails");
    }
    A_ = std::move(A);
    B_ = std::move(B);
}

LtiSystem LtiSystem::unchecked(MatrixXd A, MatrixXd B) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) {
        throw std::invalid_argument("LtiSystem::unchecked: shape mismatch");
    }
    LtiSystem sys;
    sys.A_ = std::move(A);
    sys.B_ = std::move(B);
    return sys;
}

MatrixXd expm_apply(const MatrixXd& A, double t, const MatrixXd& V) {
    if (!std::isfinite(t) || !A.allFinite() || !V.allFinite()) {
        throw std::invalid_argument("expm_apply: non-finite input");
    }
    if (V.rows() != A.rows()) {
        throw std::invalid_argument("expm_apply: V must have n rows");
    }
    const MatrixXd E = (t * A).exp();
    return E * V;
}

MatrixXd expm_apply(const LtiSystem& sys, double t, const MatrixXd& V) {
    return expm_apply(sys.A(), t, V);
}

HyperbolicSplit hyperbolic_split(const MatrixXd& A) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("hyperbolic_split: A must be square");
    }
    const int n = static_cast<int>(A.rows());
    Eigen::EigenSolver<MatrixXd> es(A);
    if (es.info() != Eigen::Success) {
        throw NumericFailure("hyperbolic_split: eigensolver failed");
    }
    const double tol_hyp = 1e-9 * std::max(1.0, A.norm());

    HyperbolicSplit split;
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double re = es.eigenvalues()(i).real();
        if (std::abs(re) <= tol_hyp) {
            split.is_hyperbolic = false;
            split.alpha = 0.0;
            return split;
        }
        alpha = std::min(alpha, std::abs(re));
    }
    split.is_hyperbolic = true;
    split.alpha = alpha;

    // Real basis: one column per real eigenvector, two (Re, Im) per complex
    // pair. Conjugates come in adjacent order from EigenSolver.
    std::vector<VectorXd> plus, minus;
    for (int i = 0; i < n; ++i) {
        const std::complex<double> lam = es.eigenvalues()(i);
        auto& bucket = (lam.real() > 0) ? plus : minus;
        if (std::abs(lam.imag()) <= tol_hyp) {
            bucket.push_back(es.eigenvectors().col(i).real());
        } else if (lam.imag() > 0) {
            bucket.push_back(es.eigenvectors().col(i).real());
            bucket.push_back(es.eigenvectors().col(i).imag());
        }
    }
    const int kp = static_cast<int>(plus.size());
    const int km = static_cast<int>(minus.size());
    split.basis_plus.resize(n, kp);
    split.basis_minus.resize(n, km);
    MatrixXd V(n, n);
    for (int i = 0; i < kp; ++i) {
        split.basis_plus.col(i) = plus[i];
        V.col(i) = plus[i];
    }
    for (int i = 0; i < km; ++i) {
        split.basis_minus.col(i) = minus[i];
        V.col(kp + i) = minus[i];
    }
    MatrixXd D = MatrixXd::Zero(n, n);
    D.topLeftCorner(kp, kp).setIdentity();
    split.projector_plus = V * D * V.inverse();
    return split;
}

}  // namespace fuelopt
