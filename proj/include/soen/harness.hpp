#pragma once

// Experiment runner behind the command-line tool.
//
// Config files are flat `key = value` text. Top-level keys: experiment,
// target (sweeps), seed, jobs, out. A `[name]` section holds overrides for
// experiment or sweep target `name`; `[grid]` lists comma-separated values
// per sweep key. Unknown keys are rejected.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace soen {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file could not be opened (exit code 2).
class MissingFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Netlist failed to parse or validate (exit code 3).
class NetlistError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment;
    std::string target;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out_dir = "out";
    /// Section name → key → raw value.
    std::map<std::string, std::map<std::string, std::string>> sections;
    /// Sweep grid in declaration order.
    std::vector<std::pair<std::string, std::vector<std::string>>> grid;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunReport {
    std::vector<std::string> artifacts;  // paths relative to the output directory
    std::vector<Check> checks;
    bool ok() const;
};

const std::vector<std::string>& experiment_ids();
const std::vector<std::string>& sweep_targets();

/// Defaults of an experiment or sweep target, as text.
std::map<std::string, std::string> default_parameters(const std::string& name);

RunReport run_experiment(const ExperimentConfig& config);
RunReport run_sweep(const ExperimentConfig& config);

struct SimRequest {
    std::string netlist_path;
    double t_stop = 0.0;  // 0: use the netlist's .tran
    double dt_max = 0.0;
    std::string out_dir = "out";
};
RunReport run_simulation(const SimRequest& request);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace soen
