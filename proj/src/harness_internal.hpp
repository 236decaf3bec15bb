#pragma once

#include <map>
#include <string>
#include <vector>

#include "soen/harness.hpp"

namespace soen::detail {

/// Resolved parameters of one experiment or sweep target.
class Params {
public:
    Params() = default;
    explicit Params(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    double num(const std::string& key) const;
    int integer(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    const std::string& str(const std::string& key) const;
    bool flag(const std::string& key) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Defaults overlaid with the config section `name`; unknown keys throw.
Params resolve(const std::string& name, const ExperimentConfig& config);

/// Writes artifacts under the run directory and records them in the report.
class Output {
public:
    Output(std::string dir, RunReport& report);

    std::string path(const std::string& name) const;
    void text(const std::string& name, const std::string& content);
    /// Rows of numbers with a header line.
    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows);
    /// Declarative plot description next to a CSV.
    void plot(const std::string& name, const std::string& title, const std::string& csv_name,
              const std::string& x_column, const std::string& x_label,
              const std::vector<std::pair<std::string, std::string>>& series);
    void check(const std::string& name, bool passed, const std::string& detail);
    /// Registers a file written directly by a callee.
    void add(const std::string& name);

    RunReport& report() { return report_; }

private:
    std::string dir_;
    RunReport& report_;
};

std::string fmt(double v);

/// Figure experiments; each writes its artifacts and checks.
void experiment_fig3(const Params& p, const ExperimentConfig& c, Output& out);
void experiment_fig5a(const Params& p, const ExperimentConfig& c, Output& out);
void experiment_fig5bc(const Params& p, const ExperimentConfig& c, Output& out);
void experiment_fig6b(const Params& p, const ExperimentConfig& c, Output& out);
void experiment_fig7(const Params& p, const ExperimentConfig& c, Output& out);
void experiment_fig8(const Params& p, const ExperimentConfig& c, Output& out);
void experiment_retention(const Params& p, const ExperimentConfig& c, Output& out);

}  // namespace soen::detail
