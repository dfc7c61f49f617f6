#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdslab/runner.hpp"

// rdslab <experiment> --config cfg.json [--seed S] [--replicas R] [--out DIR]
//
// The experiment subcommand overrides the config's "experiment" field; `run`
// uses whatever the config file names. Exit codes: 0 pass, 1 assertion
// failure, 2 invalid config.

int main(int argc, char** argv) {
    CLI::App app{"simulation and certification laboratory for random dynamical systems"};
    app.require_subcommand(1);

    const std::vector<std::string> experiments = {
        "run",           "derive-params",      "simulate-diffusion", "estimate-b",
        "verify-uniform", "face-attraction",   "cc-density",         "simulate-vpso",
        "chain-certificates", "domination",    "certify-delta"};

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int replicas = 0;
    bool seed_set = false, replicas_set = false, out_set = false;

    for (const auto& name : experiments) {
        CLI::App* sub = app.add_subcommand(
            name, name == "run" ? "run the experiment named in the config"
                                : "run the " + name + " experiment");
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--seed", seed, "base seed override")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--replicas", replicas, "replica count override")
            ->each([&](const std::string&) { replicas_set = true; });
        sub->add_option("--out", out_dir, "output directory override")
            ->each([&](const std::string&) { out_set = true; });
    }

    CLI11_PARSE(app, argc, argv);
    const std::string chosen = app.get_subcommands().front()->get_name();

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "config error at " << config_path << ": cannot open file\n";
        return 2;
    }
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        std::cerr << "config error at " << config_path << ": " << e.what() << '\n';
        return 2;
    }
    if (chosen != "run") cfg["experiment"] = chosen;

    rdslab::CliOverrides cli;
    if (seed_set) cli.seed = seed;
    if (replicas_set) cli.replicas = replicas;
    if (out_set) cli.out = out_dir;
    return rdslab::run_experiment_json(cfg, cli, std::cout);
}
