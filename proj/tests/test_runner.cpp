#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdslab/runner.hpp"

using namespace rdslab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "rdslab_runner" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config errors exit 2 and name the offending field") {
    std::ostringstream log;
    CHECK(run_experiment_json(json{{"seed", 1}}, {}, log) == 2);
    CHECK(log.str().find("config error at /experiment") != std::string::npos);

    std::ostringstream log2;
    const json bad = {{"experiment", "verify-uniform"}, {"replicas", 0}};
    CHECK(run_experiment_json(bad, {}, log2) == 2);
    CHECK(log2.str().find("/replicas") != std::string::npos);

    std::ostringstream log3;
    CHECK(run_experiment_json(json{{"experiment", "no-such"}}, {}, log3) == 2);
}

TEST_CASE("missing catalog tensor file is a config error") {
    const fs::path out = fresh_dir("missing_file");
    const json cfg = {{"experiment", "simulate-vpso"},
                      {"catalog",
                       {{"type", "files"},
                        {"tensors", {"/nonexistent/path.pso"}},
                        {"weights", {1.0}}}},
                      {"x0", {0.5, 0.5}},
                      {"out", out.string()}};
    std::ostringstream log;
    CHECK(run_experiment_json(cfg, {}, log) == 2);
    CHECK(log.str().find("file not found") != std::string::npos);
}

TEST_CASE("derive-params writes the record and warnings") {
    const fs::path out = fresh_dir("derive");
    const json cfg = {
        {"experiment", "derive-params"},
        {"out", out.string()},
        {"params",
         {{"m", 2},
          {"d", 2},
          {"nu_lower", 0.5},
          {"overrides",
           {{"alpha1", 0.99}, {"p", 0.5}, {"mu2", 0.0}, {"lambda", 0.4}, {"l1", 1.8},
            {"l0", 2}, {"M", 7}, {"q", 0.00390625}, {"mu", 0.0027},
            {"A", 0.999846}, {"B", 0.999791}, {"D", 0.989288}, {"gamma", 1e-10}}},
          {"expected", {{"alpha2", 1.54012e-4}, {"alpha3", 1.54012e-4}, {"beta", 1.54011e-4}}}}}};
    std::ostringstream log;
    CHECK(run_experiment_json(cfg, {}, log) == 0);
    CHECK(fs::exists(out / "parameters.txt"));
    const std::string summary = slurp(out / "summary.txt");
    CHECK(summary.find("warnings = 3") != std::string::npos);
    CHECK(summary.find("warning l0") != std::string::npos);
    CHECK(summary.find("warning M") != std::string::npos);
    CHECK(summary.find("warning beta") != std::string::npos);
    CHECK(summary.find("status = PASS") != std::string::npos);

    // an invalid override is an assertion failure, exit 1
    json bad = cfg;
    bad["params"]["overrides"]["lambda"] = 0.7;
    bad["out"] = fresh_dir("derive_bad").string();
    std::ostringstream log2;
    CHECK(run_experiment_json(bad, {}, log2) == 1);
    CHECK(log2.str().find("e^{lambda(m-1+mu2)}(1-p) < 1") != std::string::npos);
}

TEST_CASE("identical configs give byte-identical outputs across thread counts") {
    const json cfg = {{"experiment", "simulate-vpso"},
                      {"catalog", {{"type", "canonical"}, {"m", 2}, {"d", 2}}},
                      {"x0", {0.5, 0.5}},
                      {"n_steps", 40},
                      {"replicas", 8},
                      {"seed", 11}};
    const fs::path out_a = fresh_dir("det_a");
    const fs::path out_b = fresh_dir("det_b");

    json cfg_a = cfg;
    cfg_a["out"] = out_a.string();
    std::ostringstream log;
    setenv("RDSLAB_THREADS", "1", 1);
    CHECK(run_experiment_json(cfg_a, {}, log) == 0);
    json cfg_b = cfg;
    cfg_b["out"] = out_b.string();
    setenv("RDSLAB_THREADS", "4", 1);
    CHECK(run_experiment_json(cfg_b, {}, log) == 0);
    unsetenv("RDSLAB_THREADS");

    CHECK(slurp(out_a / "results.csv") == slurp(out_b / "results.csv"));
    CHECK(slurp(out_a / "summary.txt") == slurp(out_b / "summary.txt"));
    CHECK(!slurp(out_a / "results.csv").empty());
}

TEST_CASE("cli overrides replace config fields") {
    const json cfg = {{"experiment", "simulate-vpso"},
                      {"catalog", {{"type", "canonical"}, {"m", 2}, {"d", 2}}},
                      {"x0", {0.5, 0.5}},
                      {"n_steps", 5},
                      {"replicas", 2},
                      {"seed", 1}};
    const fs::path out = fresh_dir("cli_override");
    CliOverrides cli;
    cli.out = out.string();
    cli.replicas = 3;
    std::ostringstream log;
    CHECK(run_experiment_json(cfg, cli, log) == 0);
    CHECK(log.str().find("replicas = 3") != std::string::npos);
}

TEST_CASE("catalog loaded from tensor files") {
    const fs::path out = fresh_dir("catalog_files");
    const fs::path t1 = out / "pure1.pso";
    const fs::path t2 = out / "pure2.pso";
    {
        std::ofstream a(t1), b(t2);
        a << "pso m=2 d=2\n1 1 1 1\n1 2 2 1\n2 2 2 1\n";
        b << "pso m=2 d=2\n1 1 1 1\n1 2 1 1\n2 2 2 1\n";
    }
    const json cfg = {{"experiment", "simulate-vpso"},
                      {"catalog",
                       {{"type", "files"},
                        {"tensors", {t1.string(), t2.string()}},
                        {"weights", {0.5, 0.5}}}},
                      {"x0", {0.5, 0.5}},
                      {"n_steps", 10},
                      {"replicas", 2},
                      {"seed", 4},
                      {"out", (out / "run").string()}};
    std::ostringstream log;
    CHECK(run_experiment_json(cfg, {}, log) == 0);
    CHECK(log.str().find("nu_lower = 0.5") != std::string::npos);
}

TEST_CASE("small diffusion experiment end to end") {
    const fs::path out = fresh_dir("diffusion");
    const json cfg = {{"experiment", "simulate-diffusion"},
                      {"dimension", 1},
                      {"dt", 0.0009765625},
                      {"horizon", 2.0},
                      {"points", {{0.25}, {0.75}}},
                      {"replicas", 2},
                      {"seed", 3},
                      {"out", out.string()}};
    std::ostringstream log;
    CHECK(run_experiment_json(cfg, {}, log) == 0);
    const std::string csv = slurp(out / "results.csv");
    CHECK(csv.find("replica,t,point") != std::string::npos);
}
