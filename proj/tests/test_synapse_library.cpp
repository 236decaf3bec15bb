#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "soen/synapse_library.hpp"

using namespace soen;

namespace {

double within_rel(double v, double target) { return std::abs(v - target) / std::abs(target); }

Trace run_binary(const BinaryCellSpec& spec, double t_stop) {
    const Netlist n = build_binary_cell(spec);
    SimOptions o = SimOptions::from(n.tran());
    o.t_stop = t_stop;
    return run_transient(assemble(n), o);
}

Trace run_multistable(const MultiStableCellSpec& spec, double t_stop) {
    const Netlist n = build_multistable_cell(spec);
    SimOptions o = SimOptions::from(n.tran());
    o.t_stop = t_stop;
    o.probes = {kIsyColumn, kIssColumn};
    return run_transient(assemble(n), o);
}

}  // namespace

TEST_CASE("binary cell defaults") {
    BinaryCellSpec spec;
    CHECK(spec.beta_l_over_2pi() == doctest::Approx(1.8).epsilon(0.05));
    const Trace tr = run_binary(spec, 100e-12);
    CHECK(within_rel(quiescent_isy(tr, 50e-12, 100e-12), 1e-6) < 0.10);
}

TEST_CASE("binary cell potentiation is idempotent") {
    BinaryCellSpec one;
    one.potentiate_times = {20e-12};
    BinaryCellSpec two = one;
    two.potentiate_times.push_back(70e-12);
    const double a = quiescent_isy(run_binary(one, 150e-12), 120e-12, 150e-12);
    const double b = quiescent_isy(run_binary(two, 150e-12), 120e-12, 150e-12);
    CHECK(within_rel(a, 3e-6) < 0.10);
    CHECK(b == doctest::Approx(a).epsilon(0.01));
}

TEST_CASE("binary cell holds one of two levels under random schedules") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 5; ++trial) {
        BinaryCellSpec spec;
        std::vector<std::pair<double, bool>> events;
        for (int k = 0; k < 6; ++k) {
            const bool up = g() & 1;
            const double t = 20e-12 + 50e-12 * k;
            (up ? spec.potentiate_times : spec.depress_times).push_back(t);
            events.emplace_back(t, up);
        }
        const Trace tr = run_binary(spec, 350e-12);
        bool stored = false;
        for (std::size_t k = 0; k < events.size(); ++k) {
            stored = events[k].second;
            const double t = events[k].first + 47e-12;
            const double v = tr.value_at(kIsyColumn, t);
            CHECK(within_rel(v, stored ? 3e-6 : 1e-6) < 0.10);
        }
    }
}

TEST_CASE("binary cell validation") {
    BinaryCellSpec spec;
    spec.l_ss = 20e-12;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    CHECK_THROWS_AS(build_binary_cell(spec), ValidationError);
}

TEST_CASE("multi-stable cell steps") {
    auto big = MultiStableCellSpec::preset_200n();
    big.potentiate_times = big.train(1e-9, 3);
    const Trace a = run_multistable(big, 1e-9 + 3 * big.drive_period);
    const double isy0 = a.value_at(kIsyColumn, 0.9e-9);
    CHECK(within_rel(isy0, 2e-6) < 0.10);
    const double dsy = (a.series(kIsyColumn).back() - isy0) / 3;
    CHECK(within_rel(dsy, 2.5e-9) < 0.15);

    auto small = MultiStableCellSpec::preset_20n();
    small.potentiate_times = small.train(1e-9, 1);
    const Trace b = run_multistable(small, 1e-9 + small.drive_period);
    const double dss = b.series(kIssColumn).back() - b.value_at(kIssColumn, 0.9e-9);
    CHECK(within_rel(dss, kFluxQuantum / 20e-9) < 0.10);
}

TEST_CASE("multi-stable cell never leaves its window") {
    // Drive well past both ends of the 20 nH window.
    auto spec = MultiStableCellSpec::preset_20n();
    spec.potentiate_times = spec.train(1e-9, 120);
    spec.depress_times = spec.train(1e-9 + 120 * spec.drive_period, 240);
    const double t_stop = 1e-9 + 360 * spec.drive_period;
    const Trace tr = run_multistable(spec, t_stop);
    const double step = kFluxQuantum / spec.l_ss;
    const auto& iss = tr.series(kIssColumn);
    const double top = tr.value_at(kIssColumn, 1e-9 + 120 * spec.drive_period - 0.05e-9);
    const double bottom = iss.back();
    CHECK(top == doctest::Approx(4.96e-6).epsilon(0.03));
    CHECK(bottom == doctest::Approx(-4.94e-6).epsilon(0.03));
    CHECK(*std::max_element(iss.begin(), iss.end()) <= top + step + 1e-9);
    CHECK(within_rel(tr.series(kIsyColumn).back(), 0.8e-6) < 0.15);
}

TEST_CASE("Hebbian preset invariants") {
    HebbianCircuitSpec spec;
    CHECK(spec.beta_l_over_2pi() == doctest::Approx(1.93e4).epsilon(0.01));
    CHECK(spec.l3 >= 10 * spec.l2);
    CHECK(spec.l1 >= 10 * spec.l3);
    HebbianCircuitSpec bad = spec;
    bad.l3 = 5 * spec.l2;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("Hebbian circuit needs both photons close in time") {
    HebbianCircuitSpec spec;
    spec.post_photons = {1e-9};
    const Netlist n = build_hebbian_circuit(spec);
    SimOptions o = hebbian_options(spec, 60e-9);
    const Trace tr = run_transient(assemble(n), o);
    CHECK(count_fluxons(tr, "Bsu") == 0);

    const KernelPoint late = hebbian_event(HebbianCircuitSpec{}, 500e-9, 0.0);
    CHECK(std::abs(late.fluxons) <= 1);
}

TEST_CASE("Hebbian storage current is quantized") {
    HebbianCircuitSpec spec;
    for (double dt : {0.0, 25e-9}) {
        const KernelPoint k = hebbian_event(spec, dt, 0.0);
        CHECK(k.delta_i_ss >= 0.0);
        CHECK(k.delta_i_ss == doctest::Approx(k.fluxons * kFluxQuantum / spec.l_ss).epsilon(0.02));
    }
}

TEST_CASE("STDP halves push flux in opposite directions") {
    StdpCircuitSpec quiet;
    const Netlist n0 = build_stdp_circuit(quiet);
    SimOptions o0 = stdp_options(quiet, 500e-9);
    o0.probes = {kIsyColumn};
    const Trace t0 = run_transient(assemble(n0), o0);
    const auto& isy = t0.series(kIsyColumn);
    CHECK(*std::max_element(isy.begin(), isy.end()) - *std::min_element(isy.begin(), isy.end()) < 1e-9);

    StdpCircuitSpec up, down;
    up.add_strengthening(10e-9, 5e-9);
    down.add_weakening(10e-9, 5e-9);
    auto delta = [](const StdpCircuitSpec& s) {
        SimOptions o = stdp_options(s, 100e-9);
        o.probes = {kIsyColumn};
        const Trace tr = run_transient(assemble(build_stdp_circuit(s)), o);
        return tr.series(kIsyColumn).back() - tr.series(kIsyColumn).front();
    };
    const double step = 25e-9;  // one fluxon-equivalent at the port, 20 nH loop
    CHECK(delta(up) > step);
    CHECK(delta(down) < -step);
}

TEST_CASE("measurement helpers") {
    Trace empty;
    CHECK_THROWS(measure_isy(empty));
    std::vector<KernelPoint> rows = {{0.0, 38e-6, 10}, {10e-9, 38e-6, 6}, {20e-9, 38e-6, 2}, {0.0, 35e-6, 1}};
    // Trapezoid over Δt in seconds: (10+6)/2·10n + (6+2)/2·10n.
    CHECK(kernel_integral(rows, 38e-6) == doctest::Approx(120e-9).epsilon(1e-9));
}
