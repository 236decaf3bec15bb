#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "soen/netlist_parser.hpp"
#include "soen/synapse_library.hpp"

using namespace soen;

TEST_CASE("inductor line") {
    const auto r = parse_netlist("L1 1 0 90p\n");
    REQUIRE(r.ok());
    const Element* e = r.netlist->find("L1");
    REQUIRE(e);
    CHECK(e->node_pos == "1");
    CHECK(e->node_neg == "0");
    CHECK(e->as<Inductor>()->inductance == doctest::Approx(90e-12));
}

TEST_CASE("junction line") {
    const auto r = parse_netlist("B1 2 0 ic=40u betac=0.95 r=5\nL1 2 0 10p\n");
    REQUIRE(r.ok());
    const auto* j = r.netlist->find("B1")->as<Junction>();
    REQUIRE(j);
    CHECK(j->params.critical_current == doctest::Approx(40e-6));
    CHECK(j->params.beta_c_from_circuit() == doctest::Approx(0.95));
}

TEST_CASE("unknown unit suffix diagnostic with span") {
    const std::string text = "L1 1 0 90x\n";
    const auto r = parse_netlist(text);
    CHECK_FALSE(r.ok());
    REQUIRE_FALSE(r.diagnostics.empty());
    const auto& d = r.diagnostics.front();
    CHECK(d.span.line == 1);
    CHECK(d.message.find("unknown unit suffix x") != std::string::npos);
    // The span points inside the offending token "90x".
    CHECK(d.span.column >= 8);
    CHECK(d.span.column + d.span.length - 1 <= 10);
}

TEST_CASE("diagnostic line numbers on later lines") {
    const auto r = parse_netlist("* comment\nL1 1 0 90p\nB1 1 0 ic=40u betac=zz r=5\n");
    CHECK_FALSE(r.ok());
    REQUIRE_FALSE(r.diagnostics.empty());
    CHECK(r.diagnostics.front().span.line == 3);
}

TEST_CASE("SI numbers are case-insensitive and locale independent") {
    CHECK(*parse_si_number("4.5p") == doctest::Approx(4.5e-12));
    CHECK(*parse_si_number("5K") == doctest::Approx(5e3));
    CHECK(*parse_si_number("2MEG") == doctest::Approx(2e6));
    CHECK(*parse_si_number("3m") == doctest::Approx(3e-3));
    CHECK(*parse_si_number("7U") == doctest::Approx(7e-6));
    CHECK_FALSE(parse_si_number("1,5p").has_value());
}

TEST_CASE("format_si parses back exactly") {
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> mant(1.0, 1000.0);
    std::uniform_int_distribution<int> ex(-18, 6);
    for (int i = 0; i < 2000; ++i) {
        const double v = mant(g) * std::pow(10.0, ex(g));
        const auto back = parse_si_number(format_si(v));
        REQUIRE(back.has_value());
        CHECK(*back == v);
    }
}

TEST_CASE("serialized binary cell carries the transformer inductance") {
    const std::string text = serialize_netlist(build_binary_cell(BinaryCellSpec{}));
    std::istringstream in(text);
    std::string line;
    bool found = false;
    while (std::getline(in, line))
        if (line.rfind("L1 ", 0) == 0 && line.find("45p") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("empty netlist serializes to the tran directive only") {
    const std::string text = serialize_netlist(Netlist{});
    CHECK(text.find(".tran") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
}

namespace {

// Random valid netlist: a ground-referenced chain with junctions, inductors,
// resistors, couplings, sources and SPDs.
Netlist random_netlist(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto pick = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(g)); };
    Netlist n;
    const int nodes = 1 + static_cast<int>(u(g) * 5);
    std::vector<std::string> inductors;
    for (int i = 1; i <= nodes; ++i) {
        const std::string a = "n" + std::to_string(i);
        const std::string b = i == 1 ? std::string(kGround) : "n" + std::to_string(i - 1);
        const std::string li = "L" + std::to_string(i);
        n.add_inductor(li, a, b, pick(1e-12, 1e-6));
        inductors.push_back(li);
        n.add_junction("B" + std::to_string(i), a, kGround, make_junction(pick(5e-6, 100e-6), pick(0.01, 2.0), pick(1, 20)));
        if (u(g) < 0.5) n.add_resistor("R" + std::to_string(i), a, kGround, pick(0.1, 1e4));
        const double r = u(g);
        if (r < 0.3) n.add_source("I" + std::to_string(i), kGround, a, Waveform::dc(pick(1e-6, 50e-6)));
        else if (r < 0.6)
            n.add_source("I" + std::to_string(i), kGround, a,
                         Waveform::square_train({pick(1e-6, 20e-6), pick(1e-12, 1e-10), pick(1e-12, 1e-10),
                                                 pick(1e-12, 1e-9), 3e-9, pick(1e-12, 1e-9), 1 + static_cast<int>(u(g) * 4)}));
        else if (r < 0.8)
            n.add_source("I" + std::to_string(i), kGround, a,
                         Waveform::piecewise_linear({{0.0, 0.0}, {pick(1e-12, 1e-9), pick(1e-6, 1e-5)}, {2e-9, 0.0}}));
        if (u(g) < 0.3) {
            SpdParams s;
            s.hotspot_resistance = pick(100, 1e4);
            s.hotspot_duration = pick(1e-11, 1e-9);
            s.photon_arrival_times = {pick(1e-10, 1e-9), 2e-9 + pick(1e-10, 1e-9)};
            n.add_spd("S" + std::to_string(i), a, kGround, s);
        }
    }
    if (inductors.size() >= 2 && u(g) < 0.7) {
        if (u(g) < 0.5) n.add_coupling("K1", inductors[0], inductors[1], u(g) * 1.8 - 0.9);
        else {
            const double la = n.find(inductors[0])->as<Inductor>()->inductance;
            const double lb = n.find(inductors[1])->as<Inductor>()->inductance;
            n.add_mutual("K1", inductors[0], inductors[1], (u(g) * 1.8 - 0.9) * std::sqrt(la * lb));
        }
    }
    n.tran().t_stop = pick(1e-10, 1e-6);
    n.tran().dt_max = pick(1e-14, 1e-11);
    n.tran().output_decimation = 1 + static_cast<int>(u(g) * 3);
    n.tran().ramp_time = pick(1e-12, 1e-8);
    n.tran().settle_time = u(g) < 0.5 ? 0.0 : pick(1e-12, 1e-8);
    return n;
}

}  // namespace

TEST_CASE("round trip on randomized netlists") {
    std::mt19937_64 g(2024);
    for (int i = 0; i < 100; ++i) {
        const Netlist n = random_netlist(g);
        REQUIRE(validate_netlist(n).empty());
        const std::string text = serialize_netlist(n);
        const auto parsed = parse_netlist(text);
        REQUIRE_MESSAGE(parsed.ok(), text);
        CHECK(equivalent(*parsed.netlist, n));
        // Canonical text is a fixed point.
        CHECK(serialize_netlist(*parsed.netlist) == text);
    }
}

TEST_CASE("builder netlists round trip") {
    for (const Netlist& n : {build_binary_cell(BinaryCellSpec{}), build_multistable_cell(MultiStableCellSpec::preset_200n()),
                             build_hebbian_circuit(HebbianCircuitSpec{}), build_stdp_circuit(StdpCircuitSpec{})}) {
        const auto parsed = parse_netlist(serialize_netlist(n));
        REQUIRE(parsed.ok());
        CHECK(equivalent(*parsed.netlist, n));
    }
}

TEST_CASE("shipped circuit files match the builders") {
    StdpCircuitSpec full;
    full.buffered = true;
    const std::vector<std::pair<std::string, Netlist>> golden = {
        {"fig2_binary.cir", build_binary_cell(BinaryCellSpec{})},
        {"fig4_multistable_20n.cir", build_multistable_cell(MultiStableCellSpec::preset_20n())},
        {"fig4_multistable_200n.cir", build_multistable_cell(MultiStableCellSpec::preset_200n())},
        {"fig6_hebbian.cir", build_hebbian_circuit(HebbianCircuitSpec{})},
        {"fig8_stdp.cir", build_stdp_circuit(StdpCircuitSpec{})},
        {"fig9_full.cir", build_stdp_circuit(full)},
    };
    for (const auto& [file, built] : golden) {
        std::ifstream in(std::string(SOEN_CIRCUITS_DIR) + "/" + file);
        REQUIRE_MESSAGE(in, file);
        std::stringstream text;
        text << in.rdbuf();
        const auto parsed = parse_netlist(text.str());
        REQUIRE_MESSAGE(parsed.ok(), file);
        CHECK_MESSAGE(equivalent(*parsed.netlist, built), file);
        CHECK(text.str() == serialize_netlist(built));
    }
}
