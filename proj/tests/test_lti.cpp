#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fuelopt/lti.hpp"

#include <cmath>
#include <random>

using namespace fuelopt;

namespace {

// Independent oracle: plain convergent power series. Slow but simple, only
// used on matrices of moderate norm.
MatrixXd expm_series(const MatrixXd& A, double t) {
    const int n = static_cast<int>(A.rows());
    MatrixXd term = MatrixXd::Identity(n, n);
    MatrixXd sum = term;
    for (int k = 1; k <= 120; ++k) {
        term = (t / k) * (A * term);
        sum += term;
        if (term.norm() < 1e-18 * sum.norm()) break;
    }
    return sum;
}

MatrixXd random_matrix(std::mt19937& rng, int n, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = g(rng);
    return M;
}

}  // namespace

TEST_CASE("expm of the zero matrix is the identity") {
    const MatrixXd A = MatrixXd::Zero(2, 2);
    const MatrixXd E = expm_apply(A, 3.7, MatrixXd::Identity(2, 2));
    CHECK(E.isApprox(MatrixXd::Identity(2, 2), 1e-14));
}

TEST_CASE("expm of a nilpotent matrix truncates") {
    MatrixXd A(2, 2);
    A << 0, 1, 0, 0;
    const double t = 1.3;
    const MatrixXd E = expm_apply(A, t, MatrixXd::Identity(2, 2));
    CHECK(E(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(E(0, 1) == doctest::Approx(t).epsilon(1e-14));
    CHECK(E(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(E(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("expm of a rotation generator gives the rotation matrix") {
    MatrixXd A(2, 2);
    A << 0, 1, -1, 0;
    const double t = 0.83;
    const MatrixXd E = expm_apply(A, t, MatrixXd::Identity(2, 2));
    CHECK(std::abs(E(0, 0) - std::cos(t)) < 1e-12);
    CHECK(std::abs(E(0, 1) - std::sin(t)) < 1e-12);
    CHECK(std::abs(E(1, 0) + std::sin(t)) < 1e-12);
    CHECK(std::abs(E(1, 1) - std::cos(t)) < 1e-12);
}

TEST_CASE("expm matches the power series on random matrices") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        MatrixXd A = random_matrix(rng, n, 1.0);
        if (A.norm() > 10.0) A *= 10.0 / A.norm();
        const double t = 0.1 + 0.9 * (rng() % 100) / 100.0;
        const MatrixXd E = expm_apply(A, t, MatrixXd::Identity(n, n));
        const MatrixXd S = expm_series(A, t);
        CHECK((E - S).norm() <= 1e-12 * std::max(1.0, S.norm()));
    }
}

TEST_CASE("expm group property") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 3);
        MatrixXd A = random_matrix(rng, n, 1.0);
        if (A.norm() > 5.0) A *= 5.0 / A.norm();
        const double t = 2.0 * (rng() % 100) / 100.0 - 1.0;
        const MatrixXd V = random_matrix(rng, n, 1.0);
        const MatrixXd back = expm_apply(A, t, expm_apply(A, -t, V));
        CHECK((back - V).norm() <= 1e-10 * std::max(1.0, V.norm()));
    }
}

TEST_CASE("expm rejects non-finite input") {
    MatrixXd A(1, 1);
    A << 1.0;
    CHECK_THROWS_AS(expm_apply(A, std::nan(""), MatrixXd::Identity(1, 1)),
                    std::invalid_argument);
    A(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(expm_apply(A, 1.0, MatrixXd::Identity(1, 1)),
                    std::invalid_argument);
}

TEST_CASE("kalman rank on the double integrator") {
    MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    CHECK(kalman_rank_ok(A, B));
    B << 1, 0;
    CHECK_FALSE(kalman_rank_ok(A, B));
}

TEST_CASE("kalman rank scalar case") {
    MatrixXd A(1, 1), B(1, 1);
    A << 0;
    B << 1;
    CHECK(kalman_rank_ok(A, B));
}

TEST_CASE("kalman rank is similarity invariant") {
    std::mt19937 rng(23);
    MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    for (int trial = 0; trial < 20; ++trial) {
        MatrixXd P = random_matrix(rng, 2, 1.0);
        // Keep P comfortably invertible.
        P += 3.0 * MatrixXd::Identity(2, 2) * (P.determinant() >= 0 ? 1.0 : -1.0);
        const MatrixXd At = P * A * P.inverse();
        const MatrixXd Bt = P * B;
        CHECK(kalman_rank_ok(At, Bt));
    }
}

TEST_CASE("system constructor rejects uncontrollable pairs") {
    MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 1, 0;
    CHECK_THROWS_AS(LtiSystem(A, B), std::invalid_argument);
    CHECK_NOTHROW(LtiSystem::unchecked(A, B));
    B << 0, 1;
    const LtiSystem sys(A, B);
    CHECK(sys.n() == 2);
    CHECK(sys.m() == 1);
}

TEST_CASE("hyperbolic split: positive diagonal") {
    MatrixXd A(2, 2);
    A << 1.0, 0.0, 0.0, 2.0;
    const HyperbolicSplit s = hyperbolic_split(A);
    CHECK(s.is_hyperbolic);
    CHECK(s.basis_plus.cols() == 2);
    CHECK(s.basis_minus.cols() == 0);
    CHECK(s.alpha == doctest::Approx(1.0));
    CHECK((s.projector_plus - MatrixXd::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("hyperbolic split: rotation is not hyperbolic") {
    MatrixXd A(2, 2);
    A << 0, 1, -1, 0;
    const HyperbolicSplit s = hyperbolic_split(A);
    CHECK_FALSE(s.is_hyperbolic);
    CHECK(s.alpha == 0.0);
}

TEST_CASE("hyperbolic split: saddle") {
    MatrixXd A(2, 2);
    A << 1, 0, 0, -1;
    const HyperbolicSplit s = hyperbolic_split(A);
    CHECK(s.is_hyperbolic);
    CHECK(s.alpha == doctest::Approx(1.0));
    CHECK(s.basis_plus.cols() == 1);
    CHECK(std::abs(s.basis_plus(1, 0)) < 1e-12);
    CHECK(s.basis_minus.cols() == 1);
    CHECK(std::abs(s.basis_minus(0, 0)) < 1e-12);
}

TEST_CASE("hyperbolic split projector identities") {
    std::mt19937 rng(31);
    int done = 0;
    while (done < 15) {
        const int n = 2 + static_cast<int>(rng() % 3);
        const MatrixXd A = random_matrix(rng, n, 1.0);
        const HyperbolicSplit s = hyperbolic_split(A);
        if (!s.is_hyperbolic) continue;
        ++done;
        const MatrixXd& P = s.projector_plus;
        CHECK((P * P - P).norm() <= 1e-9 * std::max(1.0, P.norm()));
        CHECK((P * A - A * P).norm() <= 1e-8 * std::max(1.0, A.norm() * P.norm()));
        CHECK(s.basis_plus.cols() + s.basis_minus.cols() == n);
    }
}

TEST_CASE("complex pair goes into a real two-column block") {
    MatrixXd A(2, 2);
    A << 0.5, 2.0, -2.0, 0.5;
    const HyperbolicSplit s = hyperbolic_split(A);
    CHECK(s.is_hyperbolic);
    CHECK(s.basis_plus.cols() == 2);
    CHECK(s.basis_plus.allFinite());
    CHECK(s.alpha == doctest::Approx(0.5));
}

TEST_CASE("numeric failure carries its residual") {
    const NumericFailure e("stalled", 0.25);
    CHECK(e.best_residual() == 0.25);
    CHECK(std::string(e.what()) == "stalled");
}
