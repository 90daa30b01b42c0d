#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fuelopt/cli.hpp"
#include "fuelopt/report_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fuelopt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(FUELOPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fuelopt_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("solve subcommand writes a versioned report") {
    const fs::path d = fresh_dir("solve");
    const int rc = run_cli(
        "solve --A [[0,1],[0,0]] --B [[0],[1]] --x0 [0.5,-1] --T 2 --N 1024 "
        "--csv --svg --out " + d.string());
    CHECK(rc == 0);
    const auto j = nlohmann::json::parse(slurp(d / "report.json"));
    CHECK(j["schema"] == "fuelopt/1");
    CHECK(std::abs(j["cost"].get<double>() - 1.0) < 1e-3);
    CHECK(j["mode"] == "normal");
    CHECK(j["config"]["N"] == 1024);
    CHECK(fs::exists(d / "trajectory.csv"));
    CHECK(fs::exists(d / "trajectory.svg"));
}

TEST_CASE("identical configs give byte-identical artifacts") {
    const fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    const std::string args =
        "solve --A [[0,1],[0,0]] --B [[0],[1]] --x0 [0.5,-1] --T 2 --N 512 --csv";
    CHECK(run_cli(args + " --out " + d1.string()) == 0);
    CHECK(run_cli(args + " --out " + d2.string()) == 0);
    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
    CHECK(slurp(d1 / "trajectory.csv") == slurp(d2 / "trajectory.csv"));
}

TEST_CASE("infeasible solves exit with status two") {
    const fs::path d = fresh_dir("infeas");
    const int rc = run_cli(
        "solve --A [[0,1],[0,0]] --B [[0],[1]] --x0 [0,5] --T 1 --out " +
        d.string());
    CHECK(rc == kExitInfeasible);
    const auto j = nlohmann::json::parse(slurp(d / "report.json"));
    CHECK(j["mode"] == "infeasible");
}

TEST_CASE("missing initial state is a field error") {
    const fs::path d = fresh_dir("badx0");
    const int rc =
        run_cli("solve --A [[0,1],[0,0]] --B [[0],[1]] --T 2 --out " + d.string());
    CHECK(rc == kExitError);
}

TEST_CASE("malformed matrices are rejected") {
    CHECK(run_cli("solve --A [[0,1] --B [[0],[1]] --x0 [1,0] --T 1") == kExitError);
    CHECK(run_cli("solve --A [[0,1],[0]] --B [[0],[1]] --x0 [1,0] --T 1") ==
          kExitError);
}

TEST_CASE("reach emits per-direction support rows") {
    const fs::path d = fresh_dir("reach");
    const int rc = run_cli(
        "reach --A [[0,1],[0,0]] --B [[0],[1]] --x0 [0,5] --T 1 --dirs 16 --csv "
        "--out " + d.string());
    CHECK(rc == 0);
    const auto j = nlohmann::json::parse(slurp(d / "report.json"));
    CHECK(j["membership"] == "outside");
    const std::string csv = slurp(d / "reach.csv");
    CHECK(csv.rfind("xi1,xi2,support,gap", 0) == 0);
    size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 17);  // header + one row per direction
}

TEST_CASE("oscillator synth reports the closed-form cost") {
    const fs::path d = fresh_dir("osc");
    const int rc =
        run_cli("synth --case oscillator --x0 [1,0] --k 4 --out " + d.string());
    CHECK(rc == 0);
    const auto j = nlohmann::json::parse(slurp(d / "report.json"));
    const double expect = 4.0 * std::acos(1.0 - 1.0 / 32.0);
    CHECK(std::abs(j["c"].get<double>() - expect) < 1e-12);
}

TEST_CASE("spiral synth emits well-formed SVG with bang and coast classes") {
    const fs::path d = fresh_dir("hyp3");
    const int rc = run_cli(
        "synth --case hyp3 --params [0.1,1] --C0 0.8 --t-max 20 --svg --csv "
        "--out " + d.string());
    CHECK(rc == 0);
    const std::string svg = slurp(d / "synthesis.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("class=\"bang\"") != std::string::npos);
    CHECK(svg.find("class=\"coast\"") != std::string::npos);
    // Quick well-formedness proxy: tags balance.
    size_t open = 0, close = 0, selfclose = 0;
    for (size_t i = 0; i + 1 < svg.size(); ++i) {
        if (svg[i] == '<' && svg[i + 1] != '/') ++open;
        if (svg[i] == '<' && svg[i + 1] == '/') ++close;
        if (svg[i] == '/' && svg[i + 1] == '>') ++selfclose;
    }
    CHECK(open == close + selfclose);
}

TEST_CASE("unknown synth case names the field") {
    CHECK(run_cli("synth --case nope") == kExitError);
}

TEST_CASE("sweep fans out jobs and aggregates status") {
    const fs::path d = fresh_dir("sweep");
    const fs::path jobs = d / "jobs.json";
    {
        std::ofstream os(jobs);
        os << R"([
          {"task":"solve","A":[[0,1],[0,0]],"B":[[0],[1]],"x0":[0.5,-1],"T":2,"N":512},
          {"task":"solve","A":[[0,1],[0,0]],"B":[[0],[1]],"x0":[0.25,-0.5],"T":2,"N":512},
          {"task":"synth","case":"oscillator","x0":[1,0],"k":2}
        ])";
    }
    const int rc = run_cli("sweep --config " + jobs.string() + " --workers 2 --out " +
                           d.string());
    CHECK(rc == 0);
    for (int i = 0; i < 3; ++i) {
        CHECK(fs::exists(d / ("job_" + std::to_string(i)) / "report.json"));
    }
    const auto j0 =
        nlohmann::json::parse(slurp(d / "job_0" / "report.json"));
    CHECK(std::abs(j0["cost"].get<double>() - 1.0) < 1e-3);
}

TEST_CASE("config file supplies the system and flags override it") {
    const fs::path d = fresh_dir("cfg");
    const fs::path cfg = d / "sys.json";
    {
        std::ofstream os(cfg);
        os << R"({"A":[[0,1],[0,0]],"B":[[0],[1]],"x0":[0.5,-1],"T":1})";
    }
    // File horizon T=1 overridden by the flag.
    const int rc = run_cli("solve --config " + cfg.string() + " --T 2 --N 512 --out " +
                           d.string());
    CHECK(rc == 0);
    const auto j = nlohmann::json::parse(slurp(d / "report.json"));
    CHECK(j["horizon_used"].get<double>() == 2.0);
}

TEST_CASE("seventeen significant digits round-trip") {
    for (double v : {1.0 / 3.0, 2.718281828459045, -1e-17, 0.0, 123456.789}) {
        CHECK(std::stod(fmt17(v)) == v);
    }
}

TEST_CASE("report json carries residuals") {
    SolveReport rep;
    rep.cost = 1.5;
    rep.mode = SolveMode::Normal;
    rep.residuals.maximality_gap = 1e-9;
    const nlohmann::json j = report_to_json(rep);
    CHECK(j["schema"] == "fuelopt/1");
    CHECK(j["residuals"]["maximality_gap"].get<double>() == 1e-9);
    CHECK(!j.contains("covector"));
}
