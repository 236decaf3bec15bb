#pragma once

// Element types, physical constants and the netlist container shared by the
// parser, the transient engine and the synapse builders.

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "soen/waveform.hpp"

namespace soen {

/// Magnetic flux quantum h/2e in webers.
inline constexpr double kFluxQuantum = 2.067833848e-15;

/// Φ0/2π: converts a dimensionless phase into flux (Wb).
inline constexpr double kPhaseToFlux = kFluxQuantum / (2.0 * std::numbers::pi);

/// Thrown when a constructor or builder receives a value that violates a
/// physical constraint. `field()` names the offending quantity.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& what)
        : std::invalid_argument(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// RCSJ junction. C is derived from βc and R on construction.
struct JosephsonJunctionParams {
    double critical_current = 0.0;   // A
    double stewart_mccumber = 0.0;   // dimensionless βc
    double shunt_resistance = 0.0;   // Ω
    double capacitance = 0.0;        // F

    bool operator==(const JosephsonJunctionParams&) const = default;
    /// βc recomputed from the stored Ic, R, C.
    double beta_c_from_circuit() const {
        return 2.0 * std::numbers::pi * critical_current * shunt_resistance *
               shunt_resistance * capacitance / kFluxQuantum;
    }
};

/// Builds junction parameters with C = βc·Φ0 / (2π·Ic·R²).
JosephsonJunctionParams make_junction(double critical_current, double beta_c,
                                      double shunt_resistance = 5.0);

/// Default shunt resistance for all builder junctions (Ω).
inline constexpr double kDefaultJunctionResistance = 5.0;
inline constexpr double kDefaultJunctionIc = 40e-6;
inline constexpr double kDefaultBetaC = 0.95;

/// Single-photon detector as a time-dependent resistor: zero resistance,
/// except for `hotspot_duration` after each photon arrival, when it is
/// `hotspot_resistance`. Edges are linear ramps of `edge_time`.
struct SpdParams {
    double hotspot_resistance = 5e3;     // Ω
    double hotspot_duration = 200e-12;   // s
    std::vector<double> photon_arrival_times;  // s, strictly increasing
    double edge_time = 1e-12;            // s

    bool operator==(const SpdParams&) const = default;
    double resistance_at(double t) const;
    /// Times at which the resistance profile has a corner.
    std::vector<double> breakpoints() const;
};

struct Junction {
    JosephsonJunctionParams params;
    bool operator==(const Junction&) const = default;
};
struct Inductor {
    double inductance = 0.0;  // H
    bool operator==(const Inductor&) const = default;
};
struct Resistor {
    double resistance = 0.0;  // Ω
    bool operator==(const Resistor&) const = default;
};
/// Magnetic coupling between two inductors, referenced by element name.
/// Positive M: current entering inductor A at its first terminal produces
/// positive flux in B measured from B's first terminal (dot on terminal 1).
struct Mutual {
    std::string inductor_a;
    std::string inductor_b;
    double mutual = 0.0;  // H, signed
    /// Set when the coupling was specified as k = M / sqrt(La·Lb); `mutual`
    /// is then derived from it.
    std::optional<double> coupling;
    bool operator==(const Mutual&) const = default;
};
/// SPICE convention: positive current leaves `node_pos`, passes through the
/// source and enters the circuit at `node_neg`.
struct CurrentSource {
    Waveform waveform;
    bool operator==(const CurrentSource&) const = default;
};
struct Spd {
    SpdParams params;
    bool operator==(const Spd&) const = default;
};

using ElementKind = std::variant<Junction, Inductor, Resistor, Mutual, CurrentSource, Spd>;

struct Element {
    std::string name;
    std::string node_pos;  // empty for mutual couplings
    std::string node_neg;
    ElementKind kind;

    bool is_mutual() const { return std::holds_alternative<Mutual>(kind); }
    template <class T>
    const T* as() const { return std::get_if<T>(&kind); }
    bool operator==(const Element&) const = default;
};

/// Letter used for the element in the text format.
char element_letter(const ElementKind& kind);

struct TransientSpec {
    double t_stop = 1e-9;
    double dt_max = 1e-12;
    int output_decimation = 1;
    double ramp_time = 5e-9;   // source ramp before t = 0
    double settle_time = 0.0;  // extra time at full bias before t = 0

    bool operator==(const TransientSpec&) const = default;
};

inline constexpr const char* kGround = "0";

class Netlist {
public:
    Netlist();

    /// Declares a node; returns false if it already existed.
    bool add_node(const std::string& name);
    bool has_node(const std::string& name) const;
    const std::vector<std::string>& nodes() const { return nodes_; }

    /// Appends an element, auto-declaring its nodes when `declare_nodes` is set.
    void add(Element element, bool declare_nodes = true);

    void add_junction(const std::string& name, const std::string& a, const std::string& b,
                      const JosephsonJunctionParams& params);
    void add_inductor(const std::string& name, const std::string& a, const std::string& b,
                      double inductance);
    void add_resistor(const std::string& name, const std::string& a, const std::string& b,
                      double resistance);
    void add_mutual(const std::string& name, const std::string& inductor_a,
                    const std::string& inductor_b, double mutual);
    void add_coupling(const std::string& name, const std::string& inductor_a,
                      const std::string& inductor_b, double k);
    /// Source injecting `waveform` into node `into` (returning through `from`).
    void add_source(const std::string& name, const std::string& from, const std::string& into,
                    Waveform waveform);
    void add_spd(const std::string& name, const std::string& a, const std::string& b,
                 SpdParams params);

    const std::vector<Element>& elements() const { return elements_; }
    std::vector<Element>& elements() { return elements_; }
    const Element* find(const std::string& name) const;
    Element* find(const std::string& name);

    TransientSpec& tran() { return tran_; }
    const TransientSpec& tran() const { return tran_; }

private:
    std::vector<std::string> nodes_;
    std::vector<Element> elements_;
    TransientSpec tran_;
};

struct Diagnostic {
    std::string message;
    std::string element;  // empty when not element-specific
};

/// Same nodes, same elements by name and the same transient settings;
/// ordering of nodes and elements is ignored.
bool equivalent(const Netlist& a, const Netlist& b);

/// All violations, in a deterministic order. Empty means the netlist is valid.
std::vector<Diagnostic> validate_netlist(const Netlist& netlist);

/// Throws ValidationError listing all diagnostics if the netlist is invalid.
void require_valid(const Netlist& netlist);

}  // namespace soen
