#include "fuelopt/cli.hpp"

#include "fuelopt/report_io.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fuelopt {

namespace {

[[noreturn]] void fail_field(const std::string& field, const std::string& why) {
    throw std::invalid_argument("field '" + field + "': " + why);
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        fail_field(field, "expected an array of rows");
    }
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols) fail_field(field, "ragged rows");
        for (int c = 0; c < cols; ++c) {
            if (!j[i][c].is_number()) fail_field(field, "non-numeric entry");
            M(i, c) = j[i][c].get<double>();
        }
    }
    return M;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array()) fail_field(field, "expected an array");
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail_field(field, "non-numeric entry");
        v(static_cast<long>(i)) = j[i].get<double>();
    }
    return v;
}

void merge_json_into(JobConfig& cfg, const nlohmann::json& j) {
    if (j.contains("task")) cfg.task = j["task"].get<std::string>();
    if (j.contains("horizon")) cfg.horizon = j["horizon"].get<std::string>();
    if (j.contains("A")) cfg.A = matrix_from_json(j["A"], "A");
    if (j.contains("B")) cfg.B = matrix_from_json(j["B"], "B");
    if (j.contains("x0")) cfg.x0 = vector_from_json(j["x0"], "x0");
    if (j.contains("T")) cfg.T = j["T"].get<double>();
    if (j.contains("N")) cfg.N = j["N"].get<int>();
    if (j.contains("dirs")) cfg.dirs = j["dirs"].get<int>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    if (j.contains("case")) cfg.synth_case = j["case"].get<std::string>();
    if (j.contains("params")) cfg.params = j["params"].get<std::vector<double>>();
    if (j.contains("k")) cfg.k = j["k"].get<int>();
    if (j.contains("C0")) cfg.C0 = j["C0"].get<double>();
    if (j.contains("t_max")) cfg.t_max = j["t_max"].get<double>();
    if (j.contains("outdir")) cfg.outdir = j["outdir"].get<std::string>();
    if (j.contains("emit_json")) cfg.emit_json = j["emit_json"].get<bool>();
    if (j.contains("emit_csv")) cfg.emit_csv = j["emit_csv"].get<bool>();
    if (j.contains("emit_svg")) cfg.emit_svg = j["emit_svg"].get<bool>();
}

JobConfig resolve(const JobConfig& in) {
    JobConfig cfg = in;
    if (!cfg.config_file.empty()) {
        std::ifstream is(cfg.config_file);
        if (!is) fail_field("config", "cannot open " + cfg.config_file);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            fail_field("config", e.what());
        }
        JobConfig base;
        base.task = cfg.task;
        merge_json_into(base, j);
        // Flags take precedence over file values.
        if (cfg.A.size()) base.A = cfg.A;
        if (cfg.B.size()) base.B = cfg.B;
        if (cfg.x0.size()) base.x0 = cfg.x0;
        if (cfg.T > 0.0) base.T = cfg.T;
        base.horizon = cfg.horizon;
        base.N = cfg.N;
        base.dirs = cfg.dirs;
        base.tol = cfg.tol;
        base.synth_case = cfg.synth_case.empty() ? base.synth_case : cfg.synth_case;
        base.outdir = cfg.outdir;
        base.emit_json = cfg.emit_json;
        base.emit_csv = cfg.emit_csv;
        base.emit_svg = cfg.emit_svg;
        base.sweep_file = cfg.sweep_file;
        base.workers = cfg.workers;
        cfg = base;
    }
    if (cfg.tol != -1.0 && !(cfg.tol > 0.0)) fail_field("tol", "must be positive");
    if (cfg.N < 2) fail_field("N", "must be at least 2");
    return cfg;
}

LtiSystem make_system(const JobConfig& cfg) {
    if (!cfg.A.size()) fail_field("A", "missing system matrix");
    if (!cfg.B.size()) fail_field("B", "missing input matrix");
    if (cfg.A.rows() != cfg.A.cols()) fail_field("A", "must be square");
    if (cfg.B.rows() != cfg.A.rows()) fail_field("B", "row count must match A");
    try {
        return LtiSystem(cfg.A, cfg.B);
    } catch (const std::invalid_argument& e) {
        fail_field("A/B", e.what());
    }
}

nlohmann::json config_echo(const JobConfig& cfg) {
    nlohmann::json j;
    j["task"] = cfg.task;
    j["horizon"] = cfg.horizon;
    j["T"] = cfg.T;
    j["N"] = cfg.N;
    j["dirs"] = cfg.dirs;
    j["tol"] = cfg.tol;
    if (!cfg.synth_case.empty()) j["case"] = cfg.synth_case;
    return j;
}

void emit_report(const JobConfig& cfg, nlohmann::json j) {
    j["config"] = config_echo(cfg);
    if (cfg.emit_json) {
        write_file_atomic(cfg.outdir + "/report.json", j.dump(2) + "\n");
    }
}

int run_solve(const JobConfig& cfg) {
    const LtiSystem sys = make_system(cfg);
    if (!cfg.x0.size()) fail_field("x0", "missing initial state");
    if (cfg.x0.size() != sys.n()) fail_field("x0", "size must match A");
    SolveOptions opts;
    opts.N = cfg.N;
    opts.member_dirs = cfg.dirs;
    opts.member_tol = cfg.tol;

    SolveReport rep;
    if (cfg.horizon == "T") {
        if (!(cfg.T > 0.0)) fail_field("T", "must be positive for a fixed horizon");
        rep = solve_finite(sys, cfg.T, cfg.x0, opts);
    } else if (cfg.horizon == "mintime") {
        const MinTimeResult mt = solve_time_optimal(sys, cfg.x0, opts);
        rep = mt.report;
    } else if (cfg.horizon == "inf") {
        rep = solve_infinite(sys, cfg.x0, opts);
    } else {
        fail_field("horizon", "expected T, inf or mintime");
    }

    nlohmann::json j = report_to_json(rep);
    emit_report(cfg, j);
    if (rep.mode != SolveMode::Infeasible && rep.control.intervals() > 0) {
        const Trajectory traj = integrate(sys, cfg.x0, Anchor::Initial, rep.control);
        const Covector* cov = rep.covector ? &*rep.covector : nullptr;
        if (cfg.emit_csv) {
            write_file_atomic(cfg.outdir + "/trajectory.csv",
                              trajectory_csv(sys, traj, rep.control, cov));
        }
        if (cfg.emit_svg && sys.n() == 2) {
            std::vector<SvgTrajectory> items{{&traj, &rep.control}};
            write_file_atomic(cfg.outdir + "/trajectory.svg",
                              trajectories_svg(items, {}));
        }
    }
    return rep.mode == SolveMode::Infeasible ? kExitInfeasible : kExitOk;
}

int run_reach(const JobConfig& cfg) {
    const LtiSystem sys = make_system(cfg);
    if (!cfg.x0.size()) fail_field("x0", "missing initial state");
    if (cfg.x0.size() != sys.n()) fail_field("x0", "size must match A");
    if (!(cfg.T > 0.0)) fail_field("T", "must be positive");
    const MemberResult mr = member(sys, cfg.T, cfg.x0, cfg.tol, cfg.dirs);
    nlohmann::json j;
    j["schema"] = "fuelopt/1";
    j["membership"] = mr.cls == Membership::Inside
                          ? "inside"
                          : (mr.cls == Membership::Outside ? "outside" : "boundary");
    j["max_gap"] = mr.max_gap;
    emit_report(cfg, j);
    if (cfg.emit_csv) {
        write_file_atomic(cfg.outdir + "/reach.csv",
                          reach_csv(sys, cfg.T, cfg.x0, cfg.dirs, 2048));
    }
    return kExitOk;
}

double param_at(const JobConfig& cfg, size_t i, const std::string& name) {
    if (cfg.params.size() <= i) fail_field("params", "missing " + name);
    return cfg.params[i];
}

int run_synth(const JobConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "fuelopt/1";
    std::vector<Curve2D> curves;
    std::vector<SvgTrajectory> svg_items;
    std::vector<Trajectory> portraits;
    std::vector<ControlSignal> portrait_controls;

    if (cfg.synth_case == "freeparticle") {
        if (cfg.x0.size() != 2) fail_field("x0", "need a 2-vector");
        const FreeParticleResult r = free_particle_mu_inf(cfg.x0);
        j["mu_inf"] = r.mu;
        j["finite_time_attainable"] = r.finite_time_attainable;
        j["boundary_ambiguous"] = r.boundary_ambiguous;
    } else if (cfg.synth_case == "oscillator") {
        if (cfg.x0.size() != 2) fail_field("x0", "need a 2-vector");
        if (cfg.k < 1) fail_field("k", "need a positive integer");
        const OscillatorCost oc = oscillator_cost(cfg.x0, cfg.k);
        j["c"] = oc.c;
        j["alpha0"] = oc.alpha0;
        curves = oscillator_switch_circles(cfg.k);
    } else if (cfg.synth_case == "hyp1" || cfg.synth_case == "hyp2") {
        const double p0 = param_at(cfg, 0, cfg.synth_case == "hyp1" ? "lambda1" : "lambda");
        const double p1 = param_at(cfg, 1, cfg.synth_case == "hyp1" ? "lambda2" : "b");
        const SynthesisCurves sc = cfg.synth_case == "hyp1"
                                       ? hyperbolic1_curves(p0, p1)
                                       : hyperbolic2_curves(p0, p1);
        curves = sc.curves;
        if (cfg.x0.size() == 2) j["inside"] = sc.inside(cfg.x0);
    } else if (cfg.synth_case == "hyp3") {
        const HyperbolicSpiralCase hc(param_at(cfg, 0, "alpha"),
                                      param_at(cfg, 1, "beta"));
        j["c0_max"] = hc.c0_max;
        auto [bp, bm] = attainable_boundary3(hc);
        curves.push_back(bp);
        curves.push_back(bm);
        std::vector<double> c0s = cfg.C0 > 0.0 ? std::vector<double>{cfg.C0}
                                               : hyperbolic3_c0_sweep(hc);
        portraits.reserve(c0s.size());
        portrait_controls.reserve(c0s.size());
        for (double c0 : c0s) {
            Portrait3 p = hyperbolic3_portrait(hc, c0, cfg.t_max);
            portraits.push_back(std::move(p.trajectory));
            portrait_controls.push_back(std::move(p.control));
        }
        for (size_t i = 0; i < portraits.size(); ++i) {
            svg_items.push_back({&portraits[i], &portrait_controls[i]});
        }
    } else {
        fail_field("case", "expected freeparticle, oscillator, hyp1, hyp2 or hyp3");
    }

    emit_report(cfg, j);
    if (cfg.emit_csv && !curves.empty()) {
        write_file_atomic(cfg.outdir + "/curves.csv", curves_csv(curves, 256));
    }
    if (cfg.emit_csv && !portraits.empty()) {
        const LtiSystem sys = HyperbolicSpiralCase(param_at(cfg, 0, "alpha"),
                                                   param_at(cfg, 1, "beta"))
                                  .system();
        write_file_atomic(
            cfg.outdir + "/portrait.csv",
            trajectory_csv(sys, portraits[0], portrait_controls[0], nullptr));
    }
    if (cfg.emit_svg && (!curves.empty() || !svg_items.empty())) {
        write_file_atomic(cfg.outdir + "/synthesis.svg",
                          trajectories_svg(svg_items, curves));
    }
    return kExitOk;
}

int run_one(const JobConfig& cfg);

int run_sweep(const JobConfig& cfg) {
    if (cfg.sweep_file.empty()) fail_field("sweep", "missing job list file");
    std::ifstream is(cfg.sweep_file);
    if (!is) fail_field("sweep", "cannot open " + cfg.sweep_file);
    nlohmann::json arr;
    try {
        is >> arr;
    } catch (const nlohmann::json::exception& e) {
        fail_field("sweep", e.what());
    }
    if (!arr.is_array()) fail_field("sweep", "expected a JSON array of jobs");

    std::vector<JobConfig> jobs;
    for (size_t i = 0; i < arr.size(); ++i) {
        JobConfig job;
        job.outdir = cfg.outdir + "/job_" + std::to_string(i);
        merge_json_into(job, arr[i]);
        if (job.task.empty()) job.task = "solve";
        jobs.push_back(std::move(job));
    }
    unsigned workers = cfg.workers > 0 ? cfg.workers
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, jobs.size() ? jobs.size() : 1);
    std::atomic<size_t> next{0};
    std::vector<int> status(jobs.size(), kExitOk);
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            status[i] = run_one(jobs[i]);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int worst = kExitOk;
    for (int s : status) {
        if (s == kExitError) worst = kExitError;
        else if (s == kExitInfeasible && worst == kExitOk) worst = kExitInfeasible;
    }
    return worst;
}

int run_one(const JobConfig& raw) {
    try {
        const JobConfig cfg = resolve(raw);
        if (cfg.task == "solve") return run_solve(cfg);
        if (cfg.task == "reach") return run_reach(cfg);
        if (cfg.task == "synth") return run_synth(cfg);
        if (cfg.task == "sweep") return run_sweep(cfg);
        fail_field("task", "expected solve, reach, synth or sweep");
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace

int run(const JobConfig& cfg) { return run_one(cfg); }

JobConfig job_from_json(const std::string& json_text) {
    JobConfig cfg;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail_field("job", e.what());
    }
    merge_json_into(cfg, j);
    return cfg;
}

}  // namespace fuelopt
