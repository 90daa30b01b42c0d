#ifndef FUELOPT_SYNTHESIS2D_HPP
#define FUELOPT_SYNTHESIS2D_HPP

#include "fuelopt/extremal.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace fuelopt {

/// Parameterized planar curve clipped to [s0, s1]; endpoints are eval(s0)
/// and eval(s1).
struct Curve2D {
    std::string label;
    double s0 = 0.0;
    double s1 = 0.0;
    std::function<Eigen::Vector2d(double)> eval;
    Eigen::Vector2d endpoint0;
    Eigen::Vector2d endpoint1;
};

struct FreeParticleResult {
    double mu = 0.0;
    bool finite_time_attainable = false;
    // The ray {x2 = 0, x1 != 0} sits on the printed region boundary but the
    // zero cost cannot be realized there in finite time.
    bool boundary_ambiguous = false;
};

/// Infinite-horizon cost |x0_2| for the free particle, plus the region test
/// for finite-time attainment of that cost.
FreeParticleResult free_particle_mu_inf(const Eigen::Vector2d& x0);

struct OscillatorCost {
    double c = 0.0;       // k * alpha0
    double alpha0 = 0.0;  // arccos(1 - |x0|^2 / (2 k^2)), bang-arc length
};

/// Optimal cost of the k-bang-arc oscillator trajectory; requires k >= |x0|.
OscillatorCost oscillator_cost(const Eigen::Vector2d& x0, int k);

/// Switching circles centered at (k, 0) with radius |k| for
/// k in {-k_max, ..., -1, 1, ..., k_max}; all pass through the origin.
std::vector<Curve2D> oscillator_switch_circles(int k_max);

/// Periodic bang/off schedule: bang arcs of length delta (signs alternating
/// from epsilon) separated by off arcs of length pi - delta; the opening arc
/// has length alpha0 and is off or bang according to `variant`.
struct OscillatorSchedule {
    enum class Variant { OffFirst, BangFirst };
    double alpha0 = 0.0;  // in [0, pi)
    double delta = 0.0;   // in [0, pi)
    int epsilon = 1;      // sign of the first bang arc
    Variant variant = Variant::OffFirst;
};

/// Realizes the schedule as a control with `bang_arcs` full bang arcs.
ControlSignal oscillator_schedule_control(const OscillatorSchedule& s,
                                          int bang_arcs);

/// Curves plus the open-region membership test for a 2D synthesis.
struct SynthesisCurves {
    std::vector<Curve2D> curves;
    std::function<bool(const Eigen::Vector2d&)> inside;
    const Curve2D& curve(const std::string& label) const;
};

/// Saddle-free diagonal case x' = diag(l1, l2) x + (1,1) u, l1, l2 > 0.
SynthesisCurves hyperbolic1_curves(double lambda1, double lambda2);

/// Jordan-block case x' = [[l, 1], [0, l]] x + (b, 1) u, l > 0.
SynthesisCurves hyperbolic2_curves(double lambda, double b);

/// Sample points on the +1 -> 0 switching curve of the diagonal case,
/// generated by reverse-time integration from the origin (bang leg to the
/// bang equilibrium, then the coasting orbit through it).
Eigen::Matrix2Xd hyperbolic1_switch_locus(double lambda1, double lambda2,
                                          int count);

/// Unstable focus x' = [[a, b], [-b, a]] x + (0, 1) u, a > 0, b != 0.
struct HyperbolicSpiralCase {
    HyperbolicSpiralCase(double alpha, double beta);
    double alpha;
    double beta;
    std::complex<double> z_bar;  // (beta - i alpha) / (alpha^2 + beta^2)
    std::complex<double> z_lim;  // z_bar (1 + 2 / (e^{alpha pi / beta} - 1))
    double c0_max;               // sweep range is (0, c0_max]
    LtiSystem system() const;
};

struct Portrait3 {
    Trajectory trajectory;
    ControlSignal control;
};

/// One optimal trajectory of the spiral case: the covector spiral with
/// parameter C0 yields the switching function C0 e^{a s} sin(b s) in reverse
/// time; the state is integrated backward from the origin over [0, t_max].
Portrait3 hyperbolic3_portrait(const HyperbolicSpiralCase& c, double C0,
                               double t_max);

/// Default portrait sweep: `count` log-spaced C0 values over (0, c0_max].
std::vector<double> hyperbolic3_c0_sweep(const HyperbolicSpiralCase& c,
                                         int count = 64);

/// Two boundary arcs z(t) = +-(z_lim e^{(a - i b) t} + z_bar) of the
/// attainable set, t over one half-turn.
std::pair<Curve2D, Curve2D> attainable_boundary3(const HyperbolicSpiralCase& c);

}  // namespace fuelopt

#endif
