#ifndef FUELOPT_LTI_HPP
#define FUELOPT_LTI_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fuelopt {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// Thrown when an iterative routine fails to reach its tolerance.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, double best_residual = 0.0)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const { return best_residual_; }

private:
    double best_residual_;
};

/// Controllability test: numerical rank of [B, AB, ..., A^{n-1}B] equals n.
bool kalman_rank_ok(const MatrixXd& A, const MatrixXd& B);

/// The pair (A, B) of x' = Ax + Bu with |u| <= 1.
/// The checked constructor rejects uncontrollable pairs.
class LtiSystem {
public:
    LtiSystem(MatrixXd A, MatrixXd B);

    /// Skips the controllability check (negative tests, reduced systems).
    static LtiSystem unchecked(MatrixXd A, MatrixXd B);

    int n() const { return static_cast<int>(A_.rows()); }
    int m() const { return static_cast<int>(B_.cols()); }
    const MatrixXd& A() const { return A_; }
    const MatrixXd& B() const { return B_; }

private:
    LtiSystem() = default;
    MatrixXd A_, B_;
};

/// e^{tA} V for an n x k block V.
MatrixXd expm_apply(const MatrixXd& A, double t, const MatrixXd& V);
MatrixXd expm_apply(const LtiSystem& sys, double t, const MatrixXd& V);

/// Invariant splitting R^n = E+ (+) E- of a hyperbolic matrix.
struct HyperbolicSplit {
    bool is_hyperbolic = false;
    MatrixXd basis_plus;       // n x k+, columns span E+
    MatrixXd basis_minus;      // n x k-, columns span E-
    double alpha = 0.0;        // spectral gap min |Re lambda|
    MatrixXd projector_plus;   // projection onto E+ along E-
};

/// Eigen-based splitting; complex pairs are folded into real 2-column blocks.
/// Eigenvalues with |Re lambda| <= 1e-9 * max(1, ||A||) count as critical and
/// make the result non-hyperbolic.
HyperbolicSplit hyperbolic_split(const MatrixXd& A);

}  // namespace fuelopt

#endif
