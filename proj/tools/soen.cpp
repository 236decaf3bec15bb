// soen: run netlists, figure experiments, sweeps and retention runs.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "soen/harness.hpp"
#include "soen/netlist_parser.hpp"

namespace {

void print_report(const soen::RunReport& r, const std::string& dir) {
    for (const auto& a : r.artifacts) std::cout << "wrote " << dir << "/" << a << "\n";
    for (const auto& c : r.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
}

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

soen::ExperimentConfig configure(const Common& c) {
    soen::ExperimentConfig cfg = c.config.empty() ? soen::ExperimentConfig{} : soen::load_config(c.config);
    if (!c.out.empty()) cfg.out_dir = c.out;
    if (c.seed) cfg.seed = *c.seed;
    if (c.jobs) {
        if (*c.jobs < 1) throw soen::ConfigError("--jobs must be positive");
        cfg.jobs = *c.jobs;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superconducting optoelectronic synapse simulator"};
    app.require_subcommand(1);

    std::string netlist;
    std::string tstop, dtmax;
    std::string sim_out = "out";
    auto* sim = app.add_subcommand("sim", "Simulate a netlist file");
    sim->add_option("netlist", netlist, "Netlist path")->required();
    sim->add_option("--tstop", tstop, "Stop time (SI suffixes allowed)");
    sim->add_option("--dtmax", dtmax, "Largest time step");
    sim->add_option("--out", sim_out, "Output directory");

    Common exp_opts, sweep_opts, ret_opts;
    std::string experiment;
    auto* exp = app.add_subcommand("experiment", "Reproduce a figure experiment");
    exp->add_option("id", experiment, "Experiment id (overrides the config)");
    exp->add_option("--config", exp_opts.config, "Config file");
    exp->add_option("--out", exp_opts.out, "Output directory");
    exp->add_option("--seed", exp_opts.seed, "RNG seed");
    exp->add_option("--jobs", exp_opts.jobs, "Parallel jobs");

    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from a config file");
    sweep->add_option("--config", sweep_opts.config, "Config file")->required();
    sweep->add_option("--out", sweep_opts.out, "Output directory");
    sweep->add_option("--seed", sweep_opts.seed, "RNG seed");
    sweep->add_option("--jobs", sweep_opts.jobs, "Parallel jobs");

    auto* ret = app.add_subcommand("retention", "Run the retention experiment");
    ret->add_option("--config", ret_opts.config, "Config file");
    ret->add_option("--out", ret_opts.out, "Output directory");
    ret->add_option("--seed", ret_opts.seed, "RNG seed");
    ret->add_option("--jobs", ret_opts.jobs, "Parallel jobs");

    CLI11_PARSE(app, argc, argv);

    try {
        soen::RunReport report;
        std::string dir;
        if (*sim) {
            soen::SimRequest req;
            req.netlist_path = netlist;
            req.out_dir = dir = sim_out;
            auto number = [](const std::string& flag, const std::string& v) {
                if (v.empty()) return 0.0;
                std::string err;
                const auto d = soen::parse_si_number(v, &err);
                if (!d || *d <= 0) throw soen::ConfigError(flag + ": invalid value '" + v + "'");
                return *d;
            };
            req.t_stop = number("--tstop", tstop);
            req.dt_max = number("--dtmax", dtmax);
            report = soen::run_simulation(req);
        } else if (*exp) {
            auto cfg = configure(exp_opts);
            if (!experiment.empty()) cfg.experiment = experiment;
            if (cfg.experiment.empty()) throw soen::ConfigError("no experiment id given");
            dir = cfg.out_dir;
            report = soen::run_experiment(cfg);
        } else if (*sweep) {
            const auto cfg = configure(sweep_opts);
            dir = cfg.out_dir;
            report = soen::run_sweep(cfg);
        } else {
            auto cfg = configure(ret_opts);
            cfg.experiment = "retention";
            dir = cfg.out_dir;
            report = soen::run_experiment(cfg);
        }
        print_report(report, dir);
        return report.ok() ? 0 : 1;
    } catch (const soen::MissingFileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const soen::NetlistError& e) {
        std::cerr << e.what();
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
