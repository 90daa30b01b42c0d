#ifndef FUELOPT_CLI_HPP
#define FUELOPT_CLI_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fuelopt {

/// Fully resolved job description; `run` validates task-specific fields and
/// reports the offending field on standard error.
struct JobConfig {
    std::string task;  // solve | reach | synth | sweep
    std::string horizon = "T";  // T | inf | mintime (solve only)

    std::string config_file;  // optional JSON {"A": [[..]], "B": [[..]], ...}
    Eigen::MatrixXd A, B;     // flags override file values
    Eigen::VectorXd x0;
    double T = 0.0;

    int N = 4096;
    int dirs = -1;
    double tol = -1.0;

    std::string synth_case;  // freeparticle | oscillator | hyp1 | hyp2 | hyp3
    std::vector<double> params;
    int k = 0;
    double C0 = 0.0;
    double t_max = 30.0;

    std::string sweep_file;  // JSON array of job objects
    int workers = 0;         // 0: hardware concurrency

    std::string outdir = ".";
    bool emit_json = true;
    bool emit_csv = false;
    bool emit_svg = false;
};

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

/// Executes the job and writes artifacts under outdir. Returns the process
/// exit status: 0 success, 2 infeasible target, 1 error.
int run(const JobConfig& cfg);

/// Parses a job object (the sweep element / config file schema) into a config.
JobConfig job_from_json(const std::string& json_text);

}  // namespace fuelopt

#endif
