#include <cmath>
#include <numbers>

#include "doctest.h"
#include "soen/synapse_library.hpp"
#include "soen/transient_engine.hpp"

using namespace soen;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Netlist biased_junction(double ic, double beta_c, double r, double bias) {
    Netlist n;
    n.add_junction("J1", "a", kGround, make_junction(ic, beta_c, r));
    n.add_source("Ib", kGround, "a", Waveform::dc(bias));
    return n;
}

double mean_voltage(const Trace& tr, const std::string& junction, double t0, double t1) {
    return (tr.value_at(phase_column(junction), t1) - tr.value_at(phase_column(junction), t0)) * kPhaseToFlux / (t1 - t0);
}

}  // namespace

TEST_CASE("unknown counts") {
    CHECK(assemble(biased_junction(40e-6, 0.95, 5, 20e-6)).unknown_count() == 1);
    const Netlist cell = build_binary_cell(BinaryCellSpec{});
    std::size_t non_ground = 0;
    for (const auto& node : cell.nodes()) non_ground += node != kGround;
    CHECK(assemble(cell).unknown_count() == non_ground);
}

TEST_CASE("perfect coupling is a singular inductance block") {
    Netlist n;
    n.add_inductor("La", "a", kGround, 10e-12);
    n.add_inductor("Lb", "b", kGround, 40e-12);
    n.add_resistor("Ra", "a", kGround, 1.0);
    n.add_resistor("Rb", "b", kGround, 1.0);
    n.add_mutual("K1", "La", "Lb", std::sqrt(10e-12 * 40e-12));
    try {
        assemble(n);
        FAIL("expected AssemblyError");
    } catch (const AssemblyError& e) {
        CHECK(std::string(e.what()).find("singular inductance block") != std::string::npos);
    }
}

TEST_CASE("RL decay matches exp(-t/tau)") {
    Netlist n;
    const double l = 10e-9, r = 1.0, i0 = 1e-6;
    n.add_inductor("L1", "a", kGround, l);
    n.add_resistor("R1", "a", kGround, r);
    SimOptions o;
    o.t_stop = 20e-9;
    o.dt_max = 20e-12;
    o.ramp_time = 0.0;
    o.initial_phases = {{"a", i0 * l / kPhaseToFlux}};
    const Trace tr = run_transient(assemble(n), o);
    const double tau = l / r;
    CHECK(tr.value_at("I(L1)", tau) == doctest::Approx(i0 * std::exp(-1.0)).epsilon(1e-3));
    CHECK(tr.value_at("I(L1)", 2 * tau) == doctest::Approx(i0 * std::exp(-2.0)).epsilon(2e-3));
}

TEST_CASE("subcritical junction stays in the zero-voltage state") {
    SimOptions o;
    o.t_stop = 200e-12;
    o.dt_max = 0.5e-12;
    const Trace tr = run_transient(assemble(biased_junction(40e-6, 0.95, 5, 20e-6)), o);
    CHECK(std::abs(mean_voltage(tr, "J1", 100e-12, 200e-12)) < 1e-9);
    CHECK(count_fluxons(tr, "J1") == 0);
    CHECK(tr.value_at("P(J1)", 200e-12) == doctest::Approx(std::asin(0.5)).epsilon(1e-3));
}

TEST_CASE("overdamped junction average voltage") {
    const double ic = 40e-6, r = 5.0, bias = 80e-6;
    SimOptions o;
    o.t_stop = 200e-12;
    o.dt_max = 0.2e-12;
    o.ramp_time = 50e-12;
    o.settle_time = 50e-12;
    const Trace tr = run_transient(assemble(biased_junction(ic, 0.01, r, bias)), o);
    const double expected = r * std::sqrt(bias * bias - ic * ic);
    CHECK(expected == doctest::Approx(346.4e-6).epsilon(1e-4));
    CHECK(mean_voltage(tr, "J1", 50e-12, 200e-12) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("fluxon count equals rounded phase advance") {
    for (double bias : {45e-6, 60e-6, 80e-6, 120e-6}) {
        SimOptions o;
        o.t_stop = 150e-12;
        o.dt_max = 0.2e-12;
        o.ramp_time = 20e-12;
        const Trace tr = run_transient(assemble(biased_junction(40e-6, 0.5, 5, bias)), o);
        const auto& p = tr.series("P(J1)");
        // Events cover the pre-roll too; compare the windings recorded in the window.
        int in_window = 0;
        for (const auto& e : tr.fluxon_events)
            if (e.element == "J1" && e.time >= 0.0) in_window += e.polarity;
        const double windings = (p.back() - p.front()) / kTwoPi;
        CHECK(std::abs(in_window - windings) < 1.0);
        CHECK(count_fluxons(tr, "J1") >= in_window);
    }
}

TEST_CASE("trapped flux is quantized") {
    for (int nflux : {1, 2, 5}) {
        Netlist n;
        const double l = 200e-9;
        n.add_inductor("L1", "a", kGround, l);
        n.add_junction("J1", "a", kGround, make_junction(40e-6, 0.95));
        SimOptions o;
        o.t_stop = 100e-12;
        o.dt_max = 1e-12;
        o.ramp_time = 0.0;
        o.initial_phases = {{"a", kTwoPi * nflux}};
        const SimSystem sys = assemble(n);
        const Trace tr = run_transient(sys, o);
        CHECK(tr.series("I(L1)").back() == doctest::Approx(nflux * kFluxQuantum / l).epsilon(0.01));
        for (const auto& loop : loop_fluxes(sys, tr.final_state))
            CHECK(std::abs(loop.flux_quanta - std::round(loop.flux_quanta)) < 1e-3);
    }
    CHECK(kFluxQuantum / 200e-9 == doctest::Approx(10.34e-9).epsilon(1e-3));
    CHECK(kFluxQuantum / 20e-9 == doctest::Approx(103.4e-9).epsilon(1e-3));
}

TEST_CASE("halving dt_max barely moves the stored current") {
    BinaryCellSpec spec;
    spec.potentiate_times = {50e-12};
    const SimSystem sys = assemble(build_binary_cell(spec));
    SimOptions o = SimOptions::from(sys.tran);
    o.t_stop = 150e-12;
    const double a = run_transient(sys, o).series(kIssColumn).back();
    o.dt_max *= 0.5;
    const double b = run_transient(sys, o).series(kIssColumn).back();
    CHECK(std::abs(a - b) < 0.005 * std::abs(a));
}

TEST_CASE("lossless circuit conserves energy") {
    // Very large shunt: the junction is an ideal nonlinear inductor plus capacitor.
    const double ic = 40e-6, c = 0.3e-12, r = 1e7;
    const double beta_c = kTwoPi * ic * r * r * c / kFluxQuantum;
    Netlist n;
    n.add_junction("J1", "a", kGround, make_junction(ic, beta_c, r));
    n.add_inductor("L1", "a", "b", 20e-12);
    n.add_junction("J2", "b", kGround, make_junction(ic, beta_c, r));
    SimOptions o;
    o.t_stop = 10e-9;
    o.dt_max = 0.1e-12;
    o.ramp_time = 0.0;
    o.initial_phases = {{"a", 1.0}, {"b", -0.5}};
    const SimSystem sys = assemble(n);
    SimState s0;
    s0.phase = Eigen::VectorXd::Zero(2);
    s0.phase(sys.node_index("a")) = 1.0;
    s0.phase(sys.node_index("b")) = -0.5;
    s0.voltage = Eigen::VectorXd::Zero(2);
    s0.dvdt = Eigen::VectorXd::Zero(2);
    s0.spd_current = Eigen::VectorXd::Zero(0);
    const double e0 = stored_energy(sys, s0);
    const Trace tr = run_transient(sys, o);
    CHECK(stored_energy(sys, tr.final_state) == doctest::Approx(e0).epsilon(0.01));
}

TEST_CASE("junction that never switches records no events") {
    SimOptions o;
    o.t_stop = 50e-12;
    o.dt_max = 1e-12;
    const Trace tr = run_transient(assemble(biased_junction(40e-6, 0.95, 5, 0.0)), o);
    CHECK(tr.fluxon_events.empty());
    CHECK(count_fluxons(tr, "J1") == 0);
}

TEST_CASE("quiescence detection") {
    SimOptions o;
    o.t_stop = 200e-12;
    o.dt_max = 0.5e-12;
    CHECK(is_quiescent(run_transient(assemble(biased_junction(40e-6, 0.95, 5, 20e-6)), o), 100e-12, 200e-12));
    CHECK_FALSE(is_quiescent(run_transient(assemble(biased_junction(40e-6, 0.95, 5, 80e-6)), o), 100e-12, 200e-12));
}
