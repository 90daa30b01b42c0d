#include "fuelopt/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fuelopt {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

const char* mode_name(SolveMode m) {
    switch (m) {
        case SolveMode::Normal: return "normal";
        case SolveMode::Abnormal: return "abnormal";
        case SolveMode::Infeasible: return "infeasible";
    }
    return "?";
}

}  // namespace

nlohmann::json report_to_json(const SolveReport& rep) {
    nlohmann::json j;
    j["schema"] = "fuelopt/1";
    j["mode"] = mode_name(rep.mode);
    j["cost"] = rep.cost;
    j["horizon_used"] = rep.horizon_used;
    j["attained"] = rep.attained;
    j["polish_skipped"] = rep.polish_skipped;
    j["singular_arc"] = rep.singular_arc;
    j["duality_gap"] = rep.duality_gap;
    j["iterations"] = rep.iterations;
    if (rep.covector) {
        j["covector"]["p0"] = vector_json(rep.covector->p0.transpose());
        j["covector"]["mode"] =
            rep.covector->mode == ExtremalMode::Abnormal ? "abnormal" : "normal";
    }
    if (rep.control.intervals() > 0) {
        j["control"]["breakpoints"] = vector_json(rep.control.breakpoints());
        j["control"]["values"] = matrix_json(rep.control.values());
        j["control"]["from_switches"] = rep.control.from_switches();
    }
    j["residuals"]["maximality_gap"] = rep.residuals.maximality_gap;
    j["residuals"]["terminal_miss"] = rep.residuals.terminal_miss;
    if (rep.residuals.freetime_checked) {
        j["residuals"]["terminal_switch"] = rep.residuals.terminal_switch;
        j["residuals"]["tail_excess"] = rep.residuals.tail_excess;
    }
    return j;
}

std::string trajectory_csv(const LtiSystem& sys, const Trajectory& traj,
                           const ControlSignal& u, const Covector* cov) {
    std::ostringstream os;
    os << "t";
    for (int i = 0; i < sys.n(); ++i) os << ",x" << (i + 1);
    for (int i = 0; i < sys.m(); ++i) os << ",u" << (i + 1);
    os << ",pB_norm\n";
    for (int k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times(k);
        os << fmt17(t);
        for (int i = 0; i < sys.n(); ++i) os << "," << fmt17(traj.states(i, k));
        const Eigen::VectorXd uk = u.value(std::min(t, u.horizon()));
        for (int i = 0; i < sys.m(); ++i) os << "," << fmt17(uk(i));
        const double pb = cov ? switching_vector(sys, *cov, t).norm() : 0.0;
        os << "," << fmt17(pb) << "\n";
    }
    return os.str();
}

std::string reach_csv(const LtiSystem& sys, double T, const VectorXd& x0,
                      int dirs, int quad_steps) {
    if (dirs <= 0) dirs = 64 * sys.n();
    const MatrixXd grid = sphere_directions(sys.n(), dirs);
    std::ostringstream os;
    for (int i = 0; i < sys.n(); ++i) os << (i ? "," : "") << "xi" << (i + 1);
    os << ",support,gap\n";
    for (int i = 0; i < dirs; ++i) {
        SupportQuery q;
        q.sys = &sys;
        q.tau = 0.0;
        q.T = T;
        q.direction = grid.row(i);
        q.quad_steps = quad_steps;
        const double h = support(q);
        for (int j = 0; j < sys.n(); ++j) os << (j ? "," : "") << fmt17(grid(i, j));
        os << "," << fmt17(h) << "," << fmt17(grid.row(i) * x0 - h) << "\n";
    }
    return os.str();
}

std::string curves_csv(const std::vector<Curve2D>& curves, int samples) {
    std::ostringstream os;
    os << "label,s,x1,x2\n";
    for (const auto& c : curves) {
        for (int i = 0; i <= samples; ++i) {
            const double s = c.s0 + (c.s1 - c.s0) * i / samples;
            const Eigen::Vector2d p = c.eval(s);
            os << c.label << "," << fmt17(s) << "," << fmt17(p(0)) << ","
               << fmt17(p(1)) << "\n";
        }
    }
    return os.str();
}

namespace {

struct Bounds {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    void add(double x, double y) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    bool empty() const { return xmin > xmax; }
};

}  // namespace

std::string trajectories_svg(const std::vector<SvgTrajectory>& items,
                             const std::vector<Curve2D>& overlay_curves,
                             int curve_samples) {
    Bounds b;
    for (const auto& it : items) {
        for (int k = 0; k < it.traj->times.size(); ++k) {
            b.add(it.traj->states(0, k), it.traj->states(1, k));
        }
    }
    for (const auto& c : overlay_curves) {
        for (int i = 0; i <= curve_samples; ++i) {
            const Eigen::Vector2d p =
                c.eval(c.s0 + (c.s1 - c.s0) * i / curve_samples);
            b.add(p(0), p(1));
        }
    }
    if (b.empty()) b = Bounds{-1, 1, -1, 1};
    const double pad = 0.05 * std::max(b.xmax - b.xmin, b.ymax - b.ymin) + 1e-9;
    const double w = b.xmax - b.xmin + 2 * pad, h = b.ymax - b.ymin + 2 * pad;
    const double scale = 640.0 / std::max(w, h);
    auto X = [&](double x) { return (x - b.xmin + pad) * scale; };
    auto Y = [&](double y) { return (b.ymax + pad - y) * scale; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt17(w * scale)
       << "\" height=\"" << fmt17(h * scale) << "\">\n";
    os << "<style>.bang{stroke:#1f4fd6;fill:none}.coast{stroke:#d63a1f;fill:none}"
          ".curve{stroke:#888;fill:none;stroke-dasharray:4 3}</style>\n";
    for (const auto& c : overlay_curves) {
        os << "<path class=\"curve\" d=\"";
        for (int i = 0; i <= curve_samples; ++i) {
            const Eigen::Vector2d p =
                c.eval(c.s0 + (c.s1 - c.s0) * i / curve_samples);
            os << (i ? "L" : "M") << fmt17(X(p(0))) << " " << fmt17(Y(p(1)));
        }
        os << "\"/>\n";
    }
    for (const auto& it : items) {
        os << "<g>\n";
        const Trajectory& tr = *it.traj;
        for (int k = 0; k + 1 < tr.times.size(); ++k) {
            bool bang = false;
            if (it.u) {
                const double tm = 0.5 * (tr.times(k) + tr.times(k + 1));
                bang = it.u->value(tm).norm() > 0.5;
            }
            os << "<path class=\"" << (bang ? "bang" : "coast") << "\" d=\"M"
               << fmt17(X(tr.states(0, k))) << " " << fmt17(Y(tr.states(1, k)))
               << "L" << fmt17(X(tr.states(0, k + 1))) << " "
               << fmt17(Y(tr.states(1, k + 1))) << "\"/>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
    }
    fs::rename(tmp, target);
}

}  // namespace fuelopt
