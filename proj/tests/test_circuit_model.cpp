#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "soen/circuit_model.hpp"
#include "soen/synapse_library.hpp"

using namespace soen;

namespace {

bool has_message(const std::vector<Diagnostic>& d, const std::string& text) {
    return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.message.find(text) != std::string::npos; });
}

// Independent closed form for the junction capacitance.
double oracle_capacitance(double ic, double beta_c, double r) {
    const double phi0 = 6.62607015e-34 / (2.0 * 1.602176634e-19);
    return beta_c * phi0 / (2.0 * std::numbers::pi * ic * r * r);
}

}  // namespace

TEST_CASE("junction capacitance from beta_c") {
    const auto j = make_junction(40e-6, 0.95, 5.0);
    CHECK(j.capacitance == doctest::Approx(oracle_capacitance(40e-6, 0.95, 5.0)).epsilon(1e-8));
    CHECK(j.capacitance == doctest::Approx(0.3127e-12).epsilon(1e-3));
    CHECK(j.beta_c_from_circuit() == doctest::Approx(0.95).epsilon(1e-9));

    const auto small = make_junction(10e-6, 0.95, 5.0);
    CHECK(small.capacitance == doctest::Approx(4.0 * j.capacitance).epsilon(1e-12));
    CHECK(small.capacitance == doctest::Approx(1.251e-12).epsilon(1e-3));
}

TEST_CASE("junction rejects non-positive inputs naming the field") {
    try {
        make_junction(-1e-6, 0.95);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "critical_current");
    }
    CHECK_THROWS_AS(make_junction(40e-6, 0.0), ValidationError);
    CHECK_THROWS_AS(make_junction(40e-6, 0.95, 0.0), ValidationError);
}

TEST_CASE("beta_c identity holds over random parameters") {
    for (int i = 0; i < 200; ++i) {
        const double ic = 1e-6 * (1 + (i * 37) % 100);
        const double bc = 0.01 + 0.05 * (i % 40);
        const double r = 0.5 + 0.25 * (i % 30);
        CHECK(make_junction(ic, bc, r).beta_c_from_circuit() == doctest::Approx(bc).epsilon(1e-9));
    }
}

TEST_CASE("flux quantum constant") { CHECK(kFluxQuantum == 2.067833848e-15); }

TEST_CASE("validation reports undeclared nodes") {
    Netlist n;
    n.add_inductor("L1", "a", kGround, 10e-12);
    n.add_junction("J1", "a", kGround, make_junction(40e-6, 0.95));
    n.add({"L2", "a", "n9", Inductor{5e-12}}, false);
    CHECK(has_message(validate_netlist(n), "undeclared node n9"));
    CHECK_THROWS_AS(require_valid(n), ValidationError);
}

TEST_CASE("validation reports unphysical coupling") {
    Netlist n;
    n.add_inductor("La", "a", kGround, 10e-12);
    n.add_inductor("Lb", "b", kGround, 40e-12);
    n.add_junction("Ja", "a", kGround, make_junction(40e-6, 0.95));
    n.add_junction("Jb", "b", kGround, make_junction(40e-6, 0.95));
    n.add_mutual("K1", "La", "Lb", 1.1 * std::sqrt(10e-12 * 40e-12));
    CHECK(has_message(validate_netlist(n), "unphysical coupling"));
    n.elements().back().kind = Mutual{"La", "Lb", 0.9 * std::sqrt(10e-12 * 40e-12), std::nullopt};
    CHECK(validate_netlist(n).empty());
}

TEST_CASE("validation reports duplicate names and dangling nodes") {
    Netlist n;
    n.add_inductor("L1", "a", kGround, 10e-12);
    n.add_inductor("L1", "a", "b", 10e-12);
    const auto d = validate_netlist(n);
    CHECK(has_message(d, "duplicate element name L1"));
    CHECK(has_message(d, "dangling node b"));
}

TEST_CASE("builder circuits validate") {
    CHECK(validate_netlist(build_binary_cell(BinaryCellSpec{})).empty());
    CHECK(validate_netlist(build_multistable_cell(MultiStableCellSpec::preset_20n())).empty());
    CHECK(validate_netlist(build_hebbian_circuit(HebbianCircuitSpec{})).empty());
    CHECK(validate_netlist(build_stdp_circuit(StdpCircuitSpec{})).empty());
}

TEST_CASE("square train waveform shape") {
    SquareTrain s{10e-6, 100e-12, 100e-12, 1e-9, 2e-9, 1e-9, 2};
    const Waveform w = Waveform::square_train(s);
    CHECK(w.value(0.5e-9) == 0.0);
    CHECK(w.value(1.05e-9) == doctest::Approx(5e-6));
    CHECK(w.value(1.6e-9) == doctest::Approx(10e-6));
    CHECK(w.value(2.25e-9) == doctest::Approx(5e-6));
    CHECK(w.value(3.6e-9) == doctest::Approx(10e-6));
    CHECK(w.value(6e-9) == 0.0);
}

TEST_CASE("square train rejects overlapping pulses") {
    SquareTrain s{10e-6, 100e-12, 100e-12, 2e-9, 2e-9, 0.0, 3};
    CHECK_THROWS_AS(Waveform::square_train(s), ValidationError);
}
