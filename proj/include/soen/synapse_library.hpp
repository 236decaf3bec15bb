#pragma once

// Builders for the four synapse circuit families and measurement helpers
// that turn traces into synapse-level quantities.
//
// Every builder returns a validated Netlist. Junction, inductor and source
// names are stable so tests and experiments can probe them:
//   I(Lsy)  synaptic bias current delivered by the SB loop
//   I(Lss)  storage-loop current

#include <optional>
#include <string>
#include <vector>

#include "soen/circuit_model.hpp"
#include "soen/transient_engine.hpp"

namespace soen {

/// Column holding the synaptic bias current in builder traces.
inline constexpr const char* kIsyColumn = "I(Lsy)";
/// Column holding the storage-loop current in builder traces.
inline constexpr const char* kIssColumn = "I(Lss)";

/// Train of trapezoidal pulses starting at each of `starts` (piecewise linear).
Waveform pulse_schedule(const std::vector<double>& starts, double amplitude, double rise,
                        double high, double fall);

/// Flux-quantum memory cell: SS loop (Bsu, Lss, L1, Bss) coupled through
/// L1/L2 to the SB loop (L2, L3, Lsy), which is biased from the I1 line
/// through L4/L3. One potentiating pulse into Bsu stores a fluxon; one
/// depressing pulse into Bss releases it.
struct BinaryCellSpec {
    double l_ss = 90e-12;    // total SS loop inductance, L1 included
    double i_b1 = 38e-6;     // bias into Bsu
    double i_b2 = 20e-6;     // bias into Bss
    double l1 = 45e-12;      // SS side of the SS/SB transformer
    double l2 = 45e-12;      // SB side of the SS/SB transformer
    double l3 = 18e-12;      // SB side of the SB/I1 transformer
    double l4 = 18e-12;      // I1 side of the SB/I1 transformer
    double k_ss_sb = 0.5;
    double k_sb_i1 = 0.5;
    double l_sy = 135e-12;   // synapse port inductance
    double i1 = 17e-6;
    JosephsonJunctionParams junction = make_junction(kDefaultJunctionIc, kDefaultBetaC);
    double drive_amplitude = 10e-6;
    double drive_rise = 2e-12;
    double drive_high = 16e-12;
    std::vector<double> potentiate_times;  // pulse starts on I+
    std::vector<double> depress_times;     // pulse starts on I-

    /// L_ss·Ic/Φ0.
    double beta_l_over_2pi() const { return l_ss * junction.critical_current / kFluxQuantum; }
    void validate() const;
};

Netlist build_binary_cell(const BinaryCellSpec& spec);

/// Storage loop Bp–Lss–Lc–Bq fed by two DC-to-SFQ converters (P adds flux,
/// M removes it) and read out through Lc/L2 into the SB loop (L2, L3, Lsy),
/// which is biased from the I1 line through L4/L3.
///
/// Converter X (X = P or M), input node iX driven by the I± pulses:
///   L1X iX–0, escape junction BeX iX–aX, BX aX–0, L2X aX–bX, L3X bX–(p|q),
///   DC biases IaX into aX, IbX into bX, IiX into iX.
struct MultiStableCellSpec {
    double l_ss = 20e-9;
    double l_c = 18e-12;     // SS side of the SS/SB transformer
    double conv_l1 = 80e-12;
    double conv_l2 = 60e-12;
    double conv_l3 = 300e-12;
    double conv_bias_a = 33e-6;
    double conv_bias_b = 33e-6;
    double conv_bias_in = -24e-6;
    double i_ss_b = 34e-6;   // bias into each storage junction
    double sb_l2 = 190e-12;
    double sb_l3 = 18e-12;
    double sb_l4 = 18e-12;
    double k_ss_sb = 0.95;
    double k_sb_i1 = 0.95;
    double l_sy = 20.6e-12;
    double i1 = 27e-6;
    JosephsonJunctionParams junction = make_junction(kDefaultJunctionIc, kDefaultBetaC);
    double drive_amplitude = 10e-6;
    double drive_rise = 100e-12;
    double drive_fall = 100e-12;
    double drive_high = 1e-9;
    double drive_period = 2e-9;
    std::vector<double> potentiate_times;
    std::vector<double> depress_times;

    static MultiStableCellSpec preset_20n();
    static MultiStableCellSpec preset_200n();

    /// `count` pulses on one port at the drive period, first at `start`.
    std::vector<double> train(double start, int count) const;
    void validate() const;
};

Netlist build_multistable_cell(const MultiStableCellSpec& spec);

/// Two-photon coincidence circuit. I_spd enters node n and returns through
/// three branches:
///   SPD1 n–n1, L1 n1–0                      (carries the bias at rest)
///   SPD2 n–n2, L2 n2–n2r, R1 n2r–0
///   L3 n–n3, R2 n3–m, Bsu m–0               (biased by I_su)
/// The storage loop is Bsu–Lss–Bss: every 2π slip of Bsu stores one fluxon
/// in Lss. `suffix` is appended to every element and node name so halves
/// can be combined.
struct HebbianCircuitSpec {
    double l1 = 1.25e-6;
    double l2 = 12.5e-9;
    double l3 = 125e-9;
    double tau1 = 50e-9;    // L1 / r1
    double tau2 = 5e-9;     // L3 / r2
    double i_spd = 7e-6;
    double i_su = 38e-6;
    double i_ss_b = 38e-6;  // bias into the storage junction
    double l_ss = 1e-6;
    JosephsonJunctionParams junction = make_junction(kDefaultJunctionIc, kDefaultBetaC);
    double hotspot_resistance = 5e3;
    double hotspot_duration = 200e-12;
    std::vector<double> pre_photons;   // SPD1 arrivals
    std::vector<double> post_photons;  // SPD2 arrivals

    double r1() const { return l1 / tau1; }
    double r2() const { return l3 / tau2; }
    double beta_l_over_2pi() const { return l_ss * junction.critical_current / kFluxQuantum; }
    void validate() const;
};

Netlist build_hebbian_circuit(const HebbianCircuitSpec& spec);

/// Simulation settings suited to the Hebbian circuit: long settle so the
/// SPD branches reach their DC split, fluxon recording on the update junction.
SimOptions hebbian_options(const HebbianCircuitSpec& spec, double t_stop);

/// Two Hebbian halves sharing one storage loop BsuS–Lss–Lc–BsuW. A slip of
/// the strengthening junction adds flux, a slip of the weakening junction
/// removes it. The loop is read out into the SB loop as in the multi-stable
/// cell. With `buffered` the synapse port drives the synaptic firing
/// junction through the buffer stage Bb1/Bb2.
struct StdpCircuitSpec {
    HebbianCircuitSpec strengthen;
    HebbianCircuitSpec weaken;
    double l_ss = 20e-9;
    double l_c = 18e-12;
    double sb_l2 = 190e-12;
    double sb_l3 = 18e-12;
    double sb_l4 = 18e-12;
    double k_ss_sb = 0.95;
    double k_sb_i1 = 0.95;
    double l_sy = 20.6e-12;
    double i1 = 27e-6;
    bool buffered = false;
    JosephsonJunctionParams buffer1 = make_junction(10e-6, kDefaultBetaC);
    JosephsonJunctionParams buffer2 = make_junction(40e-6, kDefaultBetaC);
    JosephsonJunctionParams firing = make_junction(10e-6, kDefaultBetaC);
    double l_buffer = 10e-12;
    double i_firing_bias = 7e-6;

    StdpCircuitSpec();
    /// Schedules one strengthening (pre then post) or weakening (post then
    /// pre) event: first photon at `t`, second at `t + delay`.
    void add_strengthening(double t, double delay);
    void add_weakening(double t, double delay);
    void validate() const;
};

Netlist build_stdp_circuit(const StdpCircuitSpec& spec);
SimOptions stdp_options(const StdpCircuitSpec& spec, double t_stop);

/// Synapse-port current vs trace time. Throws if the probe is missing.
const std::vector<double>& measure_isy(const Trace& trace);
/// Mean I_sy over a quiescent window.
double quiescent_isy(const Trace& trace, double t0, double t1);

struct KernelPoint {
    double delta_t = 0.0;  // s
    double i_su = 0.0;     // A
    int fluxons = 0;       // net slips of the update junction
    double delta_i_ss = 0.0;   // A
    double fraction = 0.0;     // ΔI_ss / I_ss_sat
    std::string error;         // non-empty if the point failed
};

/// Storage current after `max_events` coincident events spaced by 6·τ1.
double measure_hebbian_saturation(const HebbianCircuitSpec& spec, int max_events = 60);

/// One coincidence event per (Δt, I_su) point from quiescence. Rows are in
/// (I_su, Δt) order of the inputs regardless of `jobs`.
std::vector<KernelPoint> sweep_hebbian_kernel(const HebbianCircuitSpec& spec,
                                              const std::vector<double>& delta_ts,
                                              const std::vector<double>& i_sus,
                                              double i_ss_sat, int jobs = 1);

/// One coincidence event: photon on SPD1 at 1 ns, on SPD2 at 1 ns + Δt.
KernelPoint hebbian_event(const HebbianCircuitSpec& spec, double delta_t, double i_ss_sat);

/// Trapezoidal integral of the fluxon count over Δt for one I_su row.
double kernel_integral(const std::vector<KernelPoint>& rows, double i_su);

}  // namespace soen
