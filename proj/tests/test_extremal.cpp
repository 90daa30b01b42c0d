#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fuelopt/extremal.hpp"

#include <cmath>
#include <random>

using namespace fuelopt;

namespace {

LtiSystem double_integrator() {
    MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    return LtiSystem(A, B);
}

LtiSystem oscillator() {
    MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, -1, 0;
    B << 0, 1;
    return LtiSystem(A, B);
}

}  // namespace

TEST_CASE("switching vector of the double integrator is affine") {
    const LtiSystem sys = double_integrator();
    RowVectorXd p0(2);
    p0 << 2.0, 3.0;
    for (double t : {0.0, 0.4, 1.9}) {
        const RowVectorXd f = switching_vector(sys, {p0, ExtremalMode::Normal}, t);
        CHECK(f(0) == doctest::Approx(-p0(0) * t + p0(1)).epsilon(1e-12));
    }
}

TEST_CASE("switching vector of the oscillator is a sinusoid") {
    const LtiSystem sys = oscillator();
    RowVectorXd p0(2);
    p0 << 0.7, -1.2;
    // p0 e^{-tA} B = p0_1 (-sin t) ... check against a*sin(t+b) fitted at 0.
    const auto f = [&](double t) {
        return switching_vector(sys, {p0, ExtremalMode::Normal}, t)(0);
    };
    const double a = std::hypot(f(0.0), f(M_PI / 2.0));
    for (double t : {0.3, 1.1, 2.9}) {
        CHECK(std::abs(f(t)) <= a + 1e-12);
        // Harmonic identity f(t) + f''(t) = 0 via central difference.
        const double h = 1e-4;
        const double fpp = (f(t + h) - 2 * f(t) + f(t - h)) / (h * h);
        CHECK(std::abs(fpp + f(t)) < 1e-6);
    }
}

TEST_CASE("switching vector on a diagonal system is a sum of exponentials") {
    MatrixXd A(2, 2), B(2, 1);
    A << 1.0, 0, 0, 2.0;
    B << 1, 1;
    const LtiSystem sys(A, B);
    RowVectorXd p0(2);
    p0 << 0.4, -0.9;
    for (double t : {0.2, 0.9}) {
        const double expect = p0(0) * std::exp(-t) + p0(1) * std::exp(-2 * t);
        CHECK(switching_vector(sys, {p0, ExtremalMode::Normal}, t)(0) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("normal feedback law thresholds at one") {
    const LtiSystem sys = double_integrator();
    // f(t) = -2t + 3: above 1 before t = 1, inside the band after.
    RowVectorXd p0(2);
    p0 << 2.0, 3.0;
    const VectorXd grid = VectorXd::LinSpaced(201, 0.0, 2.0);
    const ExtremalControl ec =
        extremal_control(sys, {p0, ExtremalMode::Normal}, grid);
    CHECK_FALSE(ec.singular_arc);
    for (int k = 0; k < ec.u.intervals(); ++k) {
        const double tm = 0.5 * (grid(k) + grid(k + 1));
        const double f = -2.0 * tm + 3.0;
        if (std::abs(std::abs(f) - 1.0) < 1e-9) continue;
        if (std::abs(f) > 1.0) {
            CHECK(ec.u.values()(0, k) == doctest::Approx(f > 0 ? 1.0 : -1.0));
        } else {
            CHECK(ec.u.values()(0, k) == 0.0);
        }
    }
}

TEST_CASE("abnormal law always normalizes and rejects a zero covector") {
    const LtiSystem sys = double_integrator();
    RowVectorXd p0(2);
    p0 << 1.0, 0.5;
    const VectorXd grid = VectorXd::LinSpaced(101, 0.0, 2.0);
    const ExtremalControl ec =
        extremal_control(sys, {p0, ExtremalMode::Abnormal}, grid);
    for (int k = 0; k < ec.u.intervals(); ++k) {
        CHECK(std::abs(ec.u.values().col(k).norm() - 1.0) < 1e-12);
    }
    RowVectorXd zero = RowVectorXd::Zero(2);
    CHECK_THROWS_AS(extremal_control(sys, {zero, ExtremalMode::Abnormal}, grid),
                    std::invalid_argument);
}

TEST_CASE("abnormal sign flip happens at the zero of the switching function") {
    const LtiSystem sys = double_integrator();
    RowVectorXd p0(2);
    p0 << 1.0, 1.0;  // f(t) = 1 - t, zero at t = 1
    const ExtremalControl ec =
        extremal_control_refined(sys, {p0, ExtremalMode::Abnormal}, 2.0);
    REQUIRE(ec.u.intervals() == 2);
    CHECK(ec.u.breakpoints()(1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ec.u.values()(0, 0) == 1.0);
    CHECK(ec.u.values()(0, 1) == -1.0);
}

TEST_CASE("refined switch times land on the threshold") {
    const LtiSystem sys = double_integrator();
    RowVectorXd p0(2);
    p0 << 2.0, 3.0;  // f = 1 at t = 1
    const ExtremalControl ec =
        extremal_control_refined(sys, {p0, ExtremalMode::Normal}, 2.0);
    REQUIRE(ec.u.intervals() == 2);
    CHECK(ec.u.breakpoints()(1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ec.u.from_switches());
}

TEST_CASE("singular arc is flagged when the magnitude sits at one") {
    const LtiSystem sys = oscillator();
    RowVectorXd p0(2);
    p0 << 1.0, 0.0;  // |f(t)| = |sin t|... amplitude exactly 1 but varying
    const VectorXd grid = VectorXd::LinSpaced(65, 0.0, 1.0);
    CHECK_FALSE(extremal_control(sys, {p0, ExtremalMode::Normal}, grid).singular_arc);

    // A genuinely constant magnitude: scalar system with A = 0, p0 = 1.
    MatrixXd As(1, 1), Bs(1, 1);
    As << 0;
    Bs << 1;
    const LtiSystem scalar(As, Bs);
    RowVectorXd ps(1);
    ps << 1.0;
    CHECK(extremal_control(scalar, {ps, ExtremalMode::Normal}, grid).singular_arc);
}

TEST_CASE("coasting keeps velocity constant on the double integrator") {
    const LtiSystem sys = double_integrator();
    const ControlSignal u = ControlSignal::zero(1, 2.0);
    const Trajectory traj =
        integrate(sys, Eigen::Vector2d(0.3, -0.7), Anchor::Initial, u);
    CHECK(traj.states(1, traj.states.cols() - 1) == doctest::Approx(-0.7));
    CHECK(traj.states(0, traj.states.cols() - 1) ==
          doctest::Approx(0.3 - 0.7 * 2.0).epsilon(1e-12));
}

TEST_CASE("bang arcs are parabolas on the double integrator") {
    const LtiSystem sys = double_integrator();
    Eigen::VectorXd bp = VectorXd::LinSpaced(33, 0.0, 1.0);
    Eigen::MatrixXd vals = MatrixXd::Ones(1, 32);
    const ControlSignal u(bp, vals);
    const Eigen::Vector2d x0(0.5, -1.0);
    const Trajectory traj = integrate(sys, x0, Anchor::Initial, u);
    for (int k = 0; k < traj.states.cols(); ++k) {
        const double x1 = traj.states(0, k), x2 = traj.states(1, k);
        CHECK(std::abs(x1 - (0.5 * (x2 * x2 - x0(1) * x0(1)) + x0(0))) < 1e-12);
    }
}

TEST_CASE("coasting conserves the oscillator radius") {
    const LtiSystem sys = oscillator();
    const ControlSignal u = ControlSignal::zero(1, 5.0);
    const Trajectory traj =
        integrate(sys, Eigen::Vector2d(0.6, 0.8), Anchor::Initial, u);
    for (int k = 0; k < traj.states.cols(); ++k) {
        CHECK(traj.states.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("forward then backward integration returns the anchor") {
    std::mt19937 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
        MatrixXd A(2, 2), B(2, 1);
        A << g(rng), g(rng), g(rng), g(rng);
        B << g(rng), g(rng);
        if (!kalman_rank_ok(A, B)) continue;
        const LtiSystem sys(A, B);
        Eigen::VectorXd bp = VectorXd::LinSpaced(65, 0.0, 1.5);
        Eigen::MatrixXd vals(1, 64);
        for (int k = 0; k < 64; ++k) vals(0, k) = std::clamp(g(rng), -1.0, 1.0);
        const ControlSignal u(bp, vals);
        const Eigen::Vector2d x0(g(rng), g(rng));
        const Trajectory fwd = integrate(sys, x0, Anchor::Initial, u);
        const Trajectory back = integrate(
            sys, fwd.states.col(fwd.states.cols() - 1), Anchor::Terminal, u);
        CHECK((back.states.col(0) - x0).norm() < 1e-9 * (1.0 + x0.norm()));
    }
}

TEST_CASE("cost is exact and additive over concatenation") {
    Eigen::VectorXd bp(3);
    bp << 0.0, 0.4, 1.0;
    Eigen::MatrixXd vals(1, 2);
    vals << 1.0, 0.0;
    const ControlSignal u(bp, vals);
    CHECK(u.cost() == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(cost_l1(u) == u.cost());
    const ControlSignal uu = u.concat(u);
    CHECK(uu.cost() == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(uu.horizon() == doctest::Approx(2.0));
    CHECK(ControlSignal::zero(1, 3.0).cost() == 0.0);
}

TEST_CASE("control values above the unit ball are rejected") {
    Eigen::VectorXd bp(2);
    bp << 0.0, 1.0;
    Eigen::MatrixXd vals(1, 1);
    vals << 1.1;
    CHECK_THROWS_AS(ControlSignal(bp, vals), std::invalid_argument);
}

TEST_CASE("pmp residuals vanish on a constructed extremal") {
    const LtiSystem sys = double_integrator();
    RowVectorXd p0(2);
    p0 << 2.0, 3.0;
    const Covector cov{p0, ExtremalMode::Normal};
    const ExtremalControl ec = extremal_control_refined(sys, cov, 2.0);
    const Trajectory traj =
        integrate(sys, Eigen::Vector2d::Zero(), Anchor::Terminal, ec.u);
    const PmpResiduals res =
        pmp_residuals(sys, traj.states.col(0), ec.u, cov, 2.0);
    CHECK(res.maximality_gap <= 1e-8);
    CHECK(res.terminal_miss <= 1e-9);
    CHECK_FALSE(res.freetime_checked);
}

TEST_CASE("perturbing the control opens a maximality gap") {
    const LtiSystem sys = double_integrator();
    RowVectorXd p0(2);
    p0 << 2.0, 3.0;
    const Covector cov{p0, ExtremalMode::Normal};
    Eigen::VectorXd bp(3);
    bp << 0.0, 1.0, 2.0;
    Eigen::MatrixXd vals(1, 2);
    vals << -1.0, 0.0;  // wrong sign on the first arc
    const ControlSignal u(bp, vals);
    const Trajectory traj =
        integrate(sys, Eigen::Vector2d::Zero(), Anchor::Terminal, u);
    const PmpResiduals res = pmp_residuals(sys, traj.states.col(0), u, cov, 2.0);
    CHECK(res.maximality_gap > 0.5);
}

TEST_CASE("abnormal extremal is all-bang on the double integrator") {
    const LtiSystem sys = double_integrator();
    RowVectorXd p0(2);
    p0 << 1.0, 0.3;
    const ExtremalControl ec =
        extremal_control_refined(sys, {p0, ExtremalMode::Abnormal}, 1.5);
    for (int k = 0; k < ec.u.intervals(); ++k) {
        CHECK(std::abs(ec.u.values().col(k).norm() - 1.0) < 1e-12);
    }
}
