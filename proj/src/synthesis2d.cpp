#include "fuelopt/synthesis2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fuelopt {

namespace {

constexpr double kPi = std::numbers::pi;

Curve2D make_curve(std::string label, double s0, double s1,
                   std::function<Eigen::Vector2d(double)> eval) {
    Curve2D c;
    c.label = std::move(label);
    c.s0 = s0;
    c.s1 = s1;
    c.eval = std::move(eval);
    c.endpoint0 = c.eval(s0);
    c.endpoint1 = c.eval(s1);
    return c;
}

}  // namespace

FreeParticleResult free_particle_mu_inf(const Eigen::Vector2d& x0) {
    FreeParticleResult res;
    res.mu = std::abs(x0(1));
    const double half_sq = 0.5 * x0(1) * x0(1);
    const bool upper = x0(0) <= -half_sq && x0(1) >= 0.0;
    const bool lower = x0(0) >= half_sq && x0(1) <= 0.0;
    res.finite_time_attainable = upper || lower;
    res.boundary_ambiguous = x0(1) == 0.0 && x0(0) != 0.0;
    return res;
}

OscillatorCost oscillator_cost(const Eigen::Vector2d& x0, int k) {
    const double r = x0.norm();
    if (k < r) {
        throw std::invalid_argument("oscillator_cost: need k >= |x0|");
    }
    OscillatorCost out;
    if (r == 0.0) return out;
    out.alpha0 = std::acos(1.0 - r * r / (2.0 * double(k) * double(k)));
    out.c = k * out.alpha0;
    return out;
}

std::vector<Curve2D> oscillator_switch_circles(int k_max) {
    if (k_max < 1) throw std::invalid_argument("oscillator_switch_circles: k_max >= 1");
    std::vector<Curve2D> out;
    for (int k = -k_max; k <= k_max; ++k) {
        if (k == 0) continue;
        const double ck = k, rk = std::abs(double(k));
        out.push_back(make_curve(
            "K_" + std::to_string(k), 0.0, 2.0 * kPi, [ck, rk](double th) {
                return Eigen::Vector2d(ck + rk * std::cos(th), rk * std::sin(th));
            }));
    }
    return out;
}

ControlSignal oscillator_schedule_control(const OscillatorSchedule& s,
                                          int bang_arcs) {
    if (!(s.alpha0 >= 0.0 && s.alpha0 < kPi) || !(s.delta >= 0.0 && s.delta < kPi)) {
        throw std::invalid_argument("oscillator_schedule_control: angles in [0, pi)");
    }
    if (s.epsilon != 1 && s.epsilon != -1) {
        throw std::invalid_argument("oscillator_schedule_control: epsilon in {-1, +1}");
    }
    const bool off_first = s.variant == OscillatorSchedule::Variant::OffFirst;
    if (off_first ? s.alpha0 > kPi - s.delta : s.alpha0 > s.delta) {
        throw std::invalid_argument("oscillator_schedule_control: alpha0 too long");
    }
    if (bang_arcs < 1) {
        throw std::invalid_argument("oscillator_schedule_control: bang_arcs >= 1");
    }
    std::vector<double> bp{0.0};
    std::vector<double> uv;
    double sign = s.epsilon;
    auto push = [&](double len, double u) {
        if (len <= 0.0) return;
        bp.push_back(bp.back() + len);
        uv.push_back(u);
    };
    int remaining = bang_arcs;
    if (off_first) {
        push(s.alpha0, 0.0);
    } else {
        push(s.alpha0, sign);
        sign = -sign;
        --remaining;
    }
    for (int i = 0; i < remaining; ++i) {
        push(s.delta, sign);
        sign = -sign;
        if (i + 1 < remaining) push(kPi - s.delta, 0.0);
    }
    Eigen::VectorXd breaks =
        Eigen::Map<Eigen::VectorXd>(bp.data(), static_cast<long>(bp.size()));
    Eigen::MatrixXd vals(1, static_cast<long>(uv.size()));
    for (size_t i = 0; i < uv.size(); ++i) vals(0, static_cast<long>(i)) = uv[i];
    return ControlSignal(breaks, vals, true);
}

const Curve2D& SynthesisCurves::curve(const std::string& label) const {
    for (const auto& c : curves) {
        if (c.label == label) return c;
    }
    throw std::invalid_argument("SynthesisCurves: unknown label " + label);
}

SynthesisCurves hyperbolic1_curves(double l1, double l2) {
    if (!(l1 > 0.0) || !(l2 > 0.0)) {
        throw std::invalid_argument("hyperbolic1_curves: eigenvalues must be positive");
    }
    const double k = l2 / l1;
    auto pt = [](double x, double y) { return Eigen::Vector2d(x, y); };
    auto cplus = [=](double x) {
        return pt(x, (2.0 * std::pow(std::max(l1 * x + 1.0, 0.0) / 2.0, k) - 1.0) / l2);
    };
    auto cminus = [=](double x) {
        return pt(x, (1.0 - 2.0 * std::pow(std::max(1.0 - l1 * x, 0.0) / 2.0, k)) / l2);
    };
    SynthesisCurves out;
    out.curves.push_back(make_curve("C_plus", -1.0 / l1, 1.0 / l1, cplus));
    out.curves.push_back(make_curve("C_minus", -1.0 / l1, 1.0 / l1, cminus));
    out.curves.push_back(make_curve("C_0_plus1", -1.0 / l1, 0.0, [=](double x) {
        return pt(x, (std::pow(std::max(l1 * x + 1.0, 0.0), k) - 1.0) / l2);
    }));
    out.curves.push_back(make_curve("C_0_minus1", 0.0, 1.0 / l1, [=](double x) {
        return pt(x, (1.0 - std::pow(std::max(1.0 - l1 * x, 0.0), k)) / l2);
    }));
    out.curves.push_back(make_curve("C_plus1_0", 0.0, 1.0 / l1, [=](double x) {
        return pt(x, std::pow(std::max(l1 * x, 0.0), k) / l2);
    }));
    out.curves.push_back(make_curve("C_minus1_0", -1.0 / l1, 0.0, [=](double x) {
        return pt(x, -std::pow(std::max(-l1 * x, 0.0), k) / l2);
    }));
    out.inside = [=](const Eigen::Vector2d& x) {
        if (!(std::abs(x(0)) < 1.0 / l1)) return false;
        return cplus(x(0))(1) < x(1) && x(1) < cminus(x(0))(1);
    };
    return out;
}

SynthesisCurves hyperbolic2_curves(double l, double b) {
    if (!(l > 0.0)) {
        throw std::invalid_argument("hyperbolic2_curves: eigenvalue must be positive");
    }
    const double e = (b - 1.0 / l) / l;  // abscissa scale of the equilibria
    auto pt = [](double x, double y) { return Eigen::Vector2d(x, y); };
    // w (lb - 1 + ln(w / den)) with the w -> 0 limit folded in.
    auto wlog = [=](double w, double den) {
        return w <= 0.0 ? 0.0 : w * (l * b - 1.0 + std::log(w / den));
    };
    auto cplus = [=](double y) { return pt(-e + wlog(l * y + 1.0, 2.0) / (l * l), y); };
    auto cminus = [=](double y) { return pt(e - wlog(1.0 - l * y, 2.0) / (l * l), y); };
    SynthesisCurves out;
    out.curves.push_back(make_curve("C_plus", -1.0 / l, 1.0 / l, cplus));
    out.curves.push_back(make_curve("C_minus", -1.0 / l, 1.0 / l, cminus));
    out.curves.push_back(make_curve("C_0_plus1", -1.0 / l, 0.0, [=](double y) {
        return pt(-e + wlog(l * y + 1.0, 1.0) / (l * l), y);
    }));
    out.curves.push_back(make_curve("C_0_minus1", 0.0, 1.0 / l, [=](double y) {
        return pt(e - wlog(1.0 - l * y, 1.0) / (l * l), y);
    }));
    out.curves.push_back(make_curve("C_plus1_0", -1.0 / l, 0.0, [=](double y) {
        return pt(y < 0.0 ? y * (1.0 - 1.0 / l + std::log(-l * y) / l) : 0.0, y);
    }));
    out.curves.push_back(make_curve("C_minus1_0", 0.0, 1.0 / l, [=](double y) {
        return pt(y > 0.0 ? y * (1.0 - 1.0 / l + std::log(l * y) / l) : 0.0, y);
    }));
    out.inside = [=](const Eigen::Vector2d& x) {
        if (!(std::abs(x(1)) < 1.0 / l)) return false;
        return cplus(x(1))(0) < x(0) && x(0) < cminus(x(1))(0);
    };
    return out;
}

Eigen::Matrix2Xd hyperbolic1_switch_locus(double l1, double l2, int count) {
    if (count < 1) throw std::invalid_argument("hyperbolic1_switch_locus: count >= 1");
    const SynthesisCurves unused = hyperbolic1_curves(l1, l2);  // validates args
    (void)unused;
    const Eigen::Vector2d eq(1.0 / l1, 1.0 / l2);
    // Reverse time, u = -1: dx/ds = -l x + 1 relaxes onto the equilibrium of
    // the bang field; long enough that the remaining error is ~1e-10.
    const double lmin = std::min(l1, l2);
    const double s_bang = std::log(eq.norm() / 1e-10) / lmin;
    Eigen::Vector2d x;
    x(0) = eq(0) * (1.0 - std::exp(-l1 * s_bang));
    x(1) = eq(1) * (1.0 - std::exp(-l2 * s_bang));
    // Coasting orbit through the equilibrium, reverse time again.
    const double s_span = 6.0 / lmin;
    Eigen::Matrix2Xd pts(2, count);
    for (int i = 0; i < count; ++i) {
        const double s = s_span * (i + 1) / count;
        pts(0, i) = x(0) * std::exp(-l1 * s);
        pts(1, i) = x(1) * std::exp(-l2 * s);
    }
    return pts;
}

HyperbolicSpiralCase::HyperbolicSpiralCase(double a, double b)
    : alpha(a), beta(b) {
    if (!(alpha > 0.0) || beta == 0.0) {
        throw std::invalid_argument("HyperbolicSpiralCase: need alpha > 0, beta != 0");
    }
    const std::complex<double> i(0.0, 1.0);
    z_bar = (beta - i * alpha) / (alpha * alpha + beta * beta);
    z_lim = z_bar * (1.0 + 2.0 / (std::exp(alpha * kPi / beta) - 1.0));
    c0_max = std::exp(2.0 * kPi * alpha / beta);
}

LtiSystem HyperbolicSpiralCase::system() const {
    MatrixXd A(2, 2), B(2, 1);
    A << alpha, beta, -beta, alpha;
    B << 0.0, 1.0;
    return LtiSystem(A, B);
}

Portrait3 hyperbolic3_portrait(const HyperbolicSpiralCase& c, double C0,
                               double t_max) {
    if (!(C0 > 0.0) || C0 > c.c0_max * (1.0 + 1e-12)) {
        throw std::invalid_argument("hyperbolic3_portrait: C0 outside (0, c0_max]");
    }
    if (!(t_max > 0.0)) {
        throw std::invalid_argument("hyperbolic3_portrait: t_max must be positive");
    }
    // Switching function along the covector spiral, in reverse time from the
    // origin: the ordinate of the spiral point at angle beta s.
    auto g = [&](double s) {
        return C0 * std::exp(c.alpha * s) * std::sin(c.beta * s);
    };
    auto sector = [&](double v) -> int {
        if (v > 1.0) return 1;
        if (v < -1.0) return -1;
        return 0;
    };
    const int scan = 16384;
    std::vector<double> sb{0.0};
    std::vector<int> arcs;
    const double ds = t_max / scan;
    int rprev = sector(g(0.5 * ds));
    arcs.push_back(rprev);
    double sprev = 0.5 * ds;
    for (int k = 1; k < scan; ++k) {
        const double sk = (k + 0.5) * ds;
        const int rk = sector(g(sk));
        if (rk != rprev) {
            double lo = sprev, hi = sk;
            while (hi - lo > 1e-13 * std::max(1.0, t_max)) {
                const double mid = 0.5 * (lo + hi);
                (sector(g(mid)) == rprev ? lo : hi) = mid;
            }
            sb.push_back(0.5 * (lo + hi));
            arcs.push_back(rk);
            rprev = rk;
        }
        sprev = sk;
    }
    sb.push_back(t_max);
    // Reverse time s maps to forward time t = t_max - s.
    const int K = static_cast<int>(arcs.size());
    Eigen::VectorXd breaks(K + 1);
    Eigen::MatrixXd vals(1, K);
    for (int i = 0; i <= K; ++i) breaks(i) = t_max - sb[K - i];
    breaks(0) = 0.0;
    for (int i = 0; i < K; ++i) vals(0, i) = arcs[K - 1 - i];
    Portrait3 out;
    out.control = ControlSignal(breaks, vals, true);
    const LtiSystem sys = c.system();
    out.trajectory =
        integrate(sys, Eigen::Vector2d::Zero(), Anchor::Terminal, out.control);
    return out;
}

std::vector<double> hyperbolic3_c0_sweep(const HyperbolicSpiralCase& c, int count) {
    if (count < 1) throw std::invalid_argument("hyperbolic3_c0_sweep: count >= 1");
    // Log-spaced over four decades below c0_max, endpoint included.
    std::vector<double> out(count);
    const double lo = std::log(c.c0_max) - 4.0 * std::log(10.0);
    const double hi = std::log(c.c0_max);
    for (int i = 0; i < count; ++i) {
        out[i] = std::exp(count == 1 ? hi : lo + (hi - lo) * i / (count - 1));
    }
    return out;
}

std::pair<Curve2D, Curve2D> attainable_boundary3(const HyperbolicSpiralCase& c) {
    const double t0 = std::min(-kPi / c.beta, 0.0);
    const double t1 = std::max(-kPi / c.beta, 0.0);
    auto arc = [c](double sgn) {
        return [c, sgn](double t) {
            const std::complex<double> i(0.0, 1.0);
            const std::complex<double> z =
                sgn * (c.z_lim * std::exp((c.alpha - i * c.beta) * t) + c.z_bar);
            return Eigen::Vector2d(z.real(), z.imag());
        };
    };
    return {make_curve("boundary_plus", t0, t1, arc(1.0)),
            make_curve("boundary_minus", t0, t1, arc(-1.0))};
}

}  // namespace fuelopt
