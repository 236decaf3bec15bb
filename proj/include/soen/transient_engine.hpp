#pragma once

// Node-phase transient solver for superconducting circuits.
//
// Unknowns are the phases of all non-ground nodes (φ = ∫V dt / (Φ0/2π))
// plus one current per SPD. Inductor currents are exact linear functions of
// branch phases through the inverse-inductance matrix of each coupled
// block, so stored flux is an integer statement about phases. Integration is
// trapezoidal with Newton iteration; the first step and every waveform
// corner restart with one backward-Euler step.

#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soen/circuit_model.hpp"

namespace soen {

class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

struct JunctionBranch {
    std::string name;
    int a = -1;  // node indices, -1 = ground
    int b = -1;
    double ic = 0.0;
    double r = 0.0;
    double c = 0.0;
};

struct ResistorBranch {
    std::string name;
    int a = -1;
    int b = -1;
    double r = 0.0;
};

struct InductorBranch {
    std::string name;
    int a = -1;
    int b = -1;
    double l = 0.0;
    int block = -1;
    int slot = -1;  // position inside the block
};

/// Inductors connected by mutual couplings. `inverse` is L⁻¹ for the block.
struct InductorBlock {
    std::vector<int> members;  // indices into SimSystem::inductors
    Eigen::MatrixXd inductance;
    Eigen::MatrixXd inverse;
};

struct SpdBranch {
    std::string name;
    int a = -1;
    int b = -1;
    SpdParams params;
};

struct SourceBranch {
    std::string name;
    int from = -1;
    int into = -1;
    Waveform waveform;
};

/// Assembled nonlinear DAE. Immutable once built.
struct SimSystem {
    std::vector<std::string> node_names;  // non-ground nodes; index = unknown
    std::vector<JunctionBranch> junctions;
    std::vector<ResistorBranch> resistors;
    std::vector<InductorBranch> inductors;
    std::vector<InductorBlock> blocks;
    std::vector<SpdBranch> spds;
    std::vector<SourceBranch> sources;
    TransientSpec tran;

    std::size_t node_count() const { return node_names.size(); }
    std::size_t unknown_count() const { return node_names.size() + spds.size(); }
    int node_index(const std::string& name) const;  // -1 for ground, throws if unknown
};

/// Builds the system. Throws AssemblyError for invalid netlists or singular
/// inductance blocks.
SimSystem assemble(const Netlist& netlist);

/// Evolving unknowns and integrator history at one instant.
struct SimState {
    double time = 0.0;
    Eigen::VectorXd phase;       // per node
    Eigen::VectorXd voltage;     // per node, trapezoidal companion value
    Eigen::VectorXd dvdt;        // per node
    Eigen::VectorXd spd_current; // per SPD
};

struct FluxonEvent {
    std::string element;
    double time = 0.0;
    int polarity = 0;  // +1 or -1
};

struct SimOptions {
    double t_stop = 1e-9;
    double dt_max = 1e-12;
    double dt_min = 1e-18;
    int output_decimation = 1;
    /// Minimum spacing between recorded samples (0 = record every kept step).
    double sample_interval = 0.0;
    double ramp_time = 5e-9;
    double settle_time = 0.0;
    /// Largest junction phase advance accepted in one step.
    double max_phase_step = std::numbers::pi / 8.0;
    /// Predictor-corrector tolerance on junction phases (rad).
    double phase_tolerance = 0.02;
    /// Predictor-corrector tolerance on inductor/SPD currents.
    double current_reltol = 1e-3;
    double current_abstol = 2e-9;  // A
    int max_newton_iterations = 25;
    /// Trace columns to keep; empty keeps everything.
    std::vector<std::string> probes;
    /// Initial node phases (by node name); others start at 0.
    std::map<std::string, double> initial_phases;
    /// Extra times the integrator must land on.
    std::vector<double> breakpoints;

    static SimOptions from(const TransientSpec& spec);
};

class Trace {
public:
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::vector<FluxonEvent> fluxon_events;
    std::vector<std::string> junction_names;
    SimState final_state;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    bool has(const std::string& column) const;
    const std::vector<double>& series(const std::string& column) const;
    /// Linear interpolation of a column at time t (clamped to the range).
    double value_at(const std::string& column, double t) const;
    /// Mean of a column over [t0, t1] (trapezoidal in time).
    double mean(const std::string& column, double t0, double t1) const;
    /// Max |value| of a column over [t0, t1].
    double max_abs(const std::string& column, double t0, double t1) const;
};

/// Column naming used by traces and CSV export.
std::string phase_column(const std::string& name);    // "P(x)"
std::string voltage_column(const std::string& node);  // "V(x)"
std::string current_column(const std::string& name); // "I(x)"

Trace run_transient(const SimSystem& system, const SimOptions& options);
Trace run_transient(const SimSystem& system, double t_stop, double dt_max);

/// Net signed 2π windings of a junction recorded in the trace.
int count_fluxons(const Trace& trace, const std::string& junction);

/// Branch current through a named inductor (A) vs trace times.
const std::vector<double>& loop_current(const Trace& trace, const std::string& inductor);

/// True when every node voltage stays below `threshold` over [t0, t1].
bool is_quiescent(const Trace& trace, double t0, double t1, double threshold = 1e-9);

/// Branch currents computed from a state.
double inductor_current(const SimSystem& system, const SimState& state, int inductor);
double junction_phase(const SimSystem& system, const SimState& state, int junction);

struct LoopFlux {
    std::vector<std::string> elements;  // loop elements in traversal order
    double flux_quanta = 0.0;           // total flux / Φ0
};

/// Fundamental loops of the superconducting subgraph (inductors, junctions,
/// SPDs) with their total flux: Σ L·I over inductors plus (Φ0/2π)·Σ junction
/// phase wrapped to (-π, π] plus (Φ0/2π)·SPD phase drop.
std::vector<LoopFlux> loop_fluxes(const SimSystem& system, const SimState& state);

/// Σ ½ LI² + Σ junction (Φ0 Ic/2π)(1 - cos φ) + Σ ½ C V².
double stored_energy(const SimSystem& system, const SimState& state);

}  // namespace soen
