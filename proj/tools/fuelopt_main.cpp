#include "fuelopt/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

namespace {

Eigen::MatrixXd parse_matrix(const std::string& text, const std::string& flag) {
    const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array() || j.empty() || !j[0].is_array()) {
        throw CLI::ValidationError(flag, "expected a JSON array of rows");
    }
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Eigen::MatrixXd M(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols || !j[r].is_array()) {
            throw CLI::ValidationError(flag, "ragged rows");
        }
        for (int c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) {
                throw CLI::ValidationError(flag, "non-numeric entry");
            }
            M(r, c) = j[r][c].get<double>();
        }
    }
    return M;
}

Eigen::VectorXd parse_vector(const std::string& text, const std::string& flag) {
    const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array() || j.empty()) {
        throw CLI::ValidationError(flag, "expected a JSON array of numbers");
    }
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw CLI::ValidationError(flag, "non-numeric entry");
        v(static_cast<long>(i)) = j[i].get<double>();
    }
    return v;
}

void add_system_flags(CLI::App* cmd, std::string* A, std::string* B,
                      std::string* x0, fuelopt::JobConfig* cfg) {
    cmd->add_option("--config", cfg->config_file, "JSON file with A, B and defaults");
    cmd->add_option("--A", *A, "system matrix, e.g. [[0,1],[0,0]]");
    cmd->add_option("--B", *B, "input matrix, e.g. [[0],[1]]");
    cmd->add_option("--x0", *x0, "initial state, e.g. [0.5,-1]");
    cmd->add_option("--out", cfg->outdir, "output directory");
    cmd->add_flag("--csv", cfg->emit_csv, "also write CSV artifacts");
    cmd->add_flag("--svg", cfg->emit_svg, "also write SVG artifacts");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimum-fuel control of linear systems"};
    app.require_subcommand(1);

    fuelopt::JobConfig cfg;
    std::string A_text, B_text, x0_text, params_text;

    auto* solve = app.add_subcommand("solve", "steer x0 to the origin");
    add_system_flags(solve, &A_text, &B_text, &x0_text, &cfg);
    solve->add_option("--T", cfg.T, "fixed horizon");
    solve->add_option("--horizon", cfg.horizon, "T, inf or mintime");
    solve->add_option("--N", cfg.N, "discretization intervals");
    solve->add_option("--tol", cfg.tol, "membership tolerance");

    auto* reach = app.add_subcommand("reach", "attainable-set membership");
    add_system_flags(reach, &A_text, &B_text, &x0_text, &cfg);
    reach->add_option("--T", cfg.T, "horizon")->required();
    reach->add_option("--dirs", cfg.dirs, "direction count");
    reach->add_option("--tol", cfg.tol, "membership tolerance");

    auto* synth = app.add_subcommand("synth", "closed-form 2D syntheses");
    add_system_flags(synth, &A_text, &B_text, &x0_text, &cfg);
    synth->add_option("--case", cfg.synth_case,
                      "freeparticle, oscillator, hyp1, hyp2 or hyp3")
        ->required();
    synth->add_option("--params", params_text, "case parameters, e.g. [1,2]");
    synth->add_option("--k", cfg.k, "oscillator arc count");
    synth->add_option("--C0", cfg.C0, "single spiral parameter");
    synth->add_option("--t-max", cfg.t_max, "portrait horizon");

    auto* sweep = app.add_subcommand("sweep", "run a batch of jobs");
    sweep->add_option("--config", cfg.sweep_file, "JSON array of job objects")
        ->required();
    sweep->add_option("--workers", cfg.workers, "worker threads");
    sweep->add_option("--out", cfg.outdir, "output directory");

    try {
        app.parse(argc, argv);
        if (!A_text.empty()) cfg.A = parse_matrix(A_text, "--A");
        if (!B_text.empty()) cfg.B = parse_matrix(B_text, "--B");
        if (!x0_text.empty()) cfg.x0 = parse_vector(x0_text, "--x0");
        if (!params_text.empty()) {
            const Eigen::VectorXd p = parse_vector(params_text, "--params");
            cfg.params.assign(p.data(), p.data() + p.size());
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? fuelopt::kExitError : fuelopt::kExitOk;
    }

    cfg.task = app.get_subcommands().front()->get_name();
    return fuelopt::run(cfg);
}
