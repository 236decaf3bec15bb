#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "harness_internal.hpp"
#include "soen/behavioral_plasticity.hpp"
#include "soen/retention.hpp"
#include "soen/synapse_library.hpp"
#include "soen/trace_io.hpp"
#include "soen/transient_engine.hpp"

namespace soen::detail {

namespace {

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

std::string ua(double a) { return fmt(a * 1e6) + " uA"; }
std::string na(double a) { return fmt(a * 1e9) + " nA"; }

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void write_trace(Output& out, const std::string& name, const Trace& tr) {
    write_trace_csv(out.path(name), tr);
    out.add(name);
}

// Storage and port currents sampled just before each drive pulse, plus once at the end.
struct Staircase {
    std::vector<double> iss, isy;
};

Staircase sample_before(const Trace& tr, const std::vector<double>& pulse_starts, double lead, double t_end) {
    Staircase s;
    for (double t : pulse_starts) {
        s.iss.push_back(tr.value_at(kIssColumn, t - lead));
        s.isy.push_back(tr.value_at(kIsyColumn, t - lead));
    }
    s.iss.push_back(tr.value_at(kIssColumn, t_end));
    s.isy.push_back(tr.value_at(kIsyColumn, t_end));
    return s;
}

}  // namespace

void experiment_fig3(const Params& p, const ExperimentConfig&, Output& out) {
    BinaryCellSpec spec;
    const double period = p.num("period");
    const int cycles = p.integer("cycles");
    const int repeats = p.integer("repeats");
    const double t0 = p.num("settle");
    // State changes every period, then repeated same-port pulses, then one
    // full potentiate+depress cycle squeezed into a single period.
    std::vector<std::pair<double, int>> pulses;  // start, +1 potentiate / -1 depress
    double t = t0;
    for (int c = 0; c < cycles; ++c, t += 2 * period) {
        pulses.emplace_back(t, +1);
        pulses.emplace_back(t + period, -1);
    }
    for (int r = 0; r < repeats; ++r, t += period) pulses.emplace_back(t, +1);
    for (int r = 0; r < repeats; ++r, t += period) pulses.emplace_back(t, -1);
    const std::size_t slow = pulses.size();
    const double fast = t;
    pulses.emplace_back(fast, +1);
    pulses.emplace_back(fast + 0.5 * period, -1);
    for (const auto& [s, d] : pulses) (d > 0 ? spec.potentiate_times : spec.depress_times).push_back(s);

    const Netlist n = build_binary_cell(spec);
    SimOptions o = SimOptions::from(n.tran());
    o.t_stop = fast + 2 * period;
    o.probes = {kIsyColumn, kIssColumn, "I(Ip)", "I(Im)"};
    const Trace tr = run_transient(assemble(n), o);
    write_trace(out, "fig3_trace.csv", tr);

    // Level after each pulse, read just before the next one.
    std::vector<std::vector<double>> rows;
    int bad = 0;
    std::vector<double> lows, highs;
    const double lead = 3e-12;
    for (std::size_t i = 0; i < slow; ++i) {
        const int stored = pulses[i].second > 0 ? 1 : 0;
        const double ts = pulses[i + 1].first - lead;
        const double v = tr.value_at(kIsyColumn, ts);
        rows.push_back({ts, v, static_cast<double>(stored)});
        (stored ? highs : lows).push_back(v);
        if (!within(v, stored ? 3e-6 : 1e-6, 0.10)) ++bad;
    }
    const double low0 = tr.value_at(kIsyColumn, t0 - lead);
    out.csv("fig3_levels.csv", {"t", "i_sy", "expected_state"}, rows);
    out.plot("fig3.plot.json", "Binary synapse switched every 50 ps", "fig3_trace.csv", "t", "time (s)",
             {{kIsyColumn, "I_sy (A)"}, {"I(Ip)", "I+ drive (A)"}, {"I(Im)", "I- drive (A)"}});

    out.check("initial level 1 uA", within(low0, 1e-6, 0.10), ua(low0));
    out.check("quiescent levels at 1/3 uA", bad == 0,
              std::to_string(bad) + " of " + std::to_string(rows.size()) + " samples outside +-10%");
    const auto spread = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    };
    // Two levels only: repeated pulses leave the level where it was.
    out.check("repeated pulses idempotent", spread(highs) < 0.05e-6 && spread(lows) < 0.05e-6,
              "high spread " + na(spread(highs)) + ", low spread " + na(spread(lows)));

    double peak = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        if (tr.times[i] >= fast && tr.times[i] <= fast + period) peak = std::max(peak, tr.series(kIsyColumn)[i]);
    const double back = tr.value_at(kIsyColumn, fast + period);
    out.check("full cycle within one period", peak >= 2.7e-6 && within(back, 1e-6, 0.10),
              "peak " + ua(peak) + ", level after one period " + ua(back));
    out.check("no stray junction slips", count_fluxons(tr, "Bsu") == count_fluxons(tr, "Bss"),
              "Bsu " + std::to_string(count_fluxons(tr, "Bsu")) + ", Bss " +
                  std::to_string(count_fluxons(tr, "Bss")));
}

void experiment_fig5a(const Params& p, const ExperimentConfig&, Output& out) {
    MultiStableCellSpec spec = MultiStableCellSpec::preset_200n();
    spec.l_ss = p.num("l_ss");
    const int pulses = p.integer("pulses");
    const double start = 1e-9;
    spec.potentiate_times = spec.train(start, pulses);
    const Netlist n = build_multistable_cell(spec);
    SimOptions o = SimOptions::from(n.tran());
    o.t_stop = start + pulses * spec.drive_period;
    o.probes = {kIsyColumn, kIssColumn};
    o.sample_interval = 0.1e-9;
    const Trace tr = run_transient(assemble(n), o);
    write_trace(out, "fig5a_trace.csv", tr);

    const Staircase s = sample_before(tr, spec.potentiate_times, 0.05e-9, o.t_stop);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < s.iss.size(); ++i) rows.push_back({static_cast<double>(i), s.iss[i], s.isy[i]});
    out.csv("fig5a_steps.csv", {"pulses", "i_ss", "i_sy"}, rows);
    out.plot("fig5a.plot.json", "Multi-stable staircase and saturation", "fig5a_steps.csv", "pulses",
             "potentiating pulses", {{"i_sy", "I_sy (A)"}, {"i_ss", "I_ss (A)"}});

    const double step_ss = kFluxQuantum / spec.l_ss;
    // Saturated from the first pulse after which I_ss stays within one step of its final value.
    int saturation = -1;
    for (std::size_t i = s.iss.size(); i-- > 0;) {
        if (std::abs(s.iss[i] - s.iss.back()) > step_ss) break;
        saturation = static_cast<int>(i);
    }
    if (saturation + 1 >= static_cast<int>(s.iss.size()) - 1) saturation = -1;
    std::vector<double> dss, dsy;
    for (std::size_t i = 1; i < s.iss.size() && i <= 100; ++i) {
        dss.push_back(s.iss[i] - s.iss[i - 1]);
        dsy.push_back(s.isy[i] - s.isy[i - 1]);
    }
    const double mss = median(dss), msy = median(dsy);
    const double final_isy = s.isy.back();
    out.check("storage step = flux quantum / L_ss", within(mss, 10.34e-9, 0.05), na(mss));
    out.check("port step 2.5 nA", within(msy, 2.5e-9, 0.15), na(msy));
    out.check("final I_sy in 3.0..3.4 uA", final_isy >= 3.0e-6 && final_isy <= 3.4e-6, ua(final_isy));
    out.check("saturation after 400..650 pulses", saturation >= 400 && saturation <= 650,
              saturation < 0 ? "no saturation within " + std::to_string(pulses) + " pulses"
                             : std::to_string(saturation) + " pulses");
}

void experiment_fig5bc(const Params& p, const ExperimentConfig&, Output& out) {
    MultiStableCellSpec spec = MultiStableCellSpec::preset_20n();
    spec.l_ss = p.num("l_ss");
    const int pulses = p.integer("pulses");
    const int cycles = p.integer("cycles");
    const double start = 1e-9;
    const double phase = pulses * spec.drive_period;
    std::vector<double> all;
    for (int c = 0; c < cycles; ++c) {
        const auto up = spec.train(start + 2 * c * phase, pulses);
        const auto down = spec.train(start + (2 * c + 1) * phase, pulses);
        spec.potentiate_times.insert(spec.potentiate_times.end(), up.begin(), up.end());
        spec.depress_times.insert(spec.depress_times.end(), down.begin(), down.end());
        all.insert(all.end(), up.begin(), up.end());
        all.insert(all.end(), down.begin(), down.end());
    }
    const Netlist n = build_multistable_cell(spec);
    SimOptions o = SimOptions::from(n.tran());
    o.t_stop = start + 2 * cycles * phase;
    o.probes = {kIsyColumn, kIssColumn};
    o.sample_interval = 0.1e-9;
    const Trace tr = run_transient(assemble(n), o);
    write_trace(out, "fig5bc_trace.csv", tr);

    const Staircase s = sample_before(tr, all, 0.05e-9, o.t_stop);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < s.iss.size(); ++i) rows.push_back({static_cast<double>(i), s.iss[i], s.isy[i]});
    out.csv("fig5bc_steps.csv", {"pulses", "i_ss", "i_sy"}, rows);
    out.plot("fig5bc.plot.json", "Cyclic potentiation and depression", "fig5bc_trace.csv", "t", "time (s)",
             {{kIsyColumn, "I_sy (A)"}, {kIssColumn, "I_ss (A)"}});

    const double step_ss = kFluxQuantum / spec.l_ss;
    std::vector<double> d;
    for (int i = 1; i <= std::min(pulses, 10); ++i) d.push_back(s.iss[i] - s.iss[i - 1]);
    const double mss = median(d);
    std::vector<double> tops_ss, floors_ss, floors_sy;
    for (int c = 0; c < cycles; ++c) {
        const std::size_t top = static_cast<std::size_t>((2 * c + 1) * pulses);
        const std::size_t bottom = static_cast<std::size_t>((2 * c + 2) * pulses);
        tops_ss.push_back(s.iss[top]);
        floors_ss.push_back(s.iss[bottom]);
        floors_sy.push_back(s.isy[bottom]);
    }
    const auto spread = [](const std::vector<double>& v) {
        return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    };
    const double floor_isy = median(floors_sy);
    out.check("storage step = flux quantum / L_ss", within(mss, 103.4e-9, 0.05), na(mss));
    out.check("depressed floor 0.8 uA", within(floor_isy, 0.8e-6, 0.15), ua(floor_isy));
    out.check("no drift across cycles",
              spread(tops_ss) <= 1.01 * step_ss && spread(floors_ss) <= 1.01 * step_ss,
              "top spread " + na(spread(tops_ss)) + ", floor spread " + na(spread(floors_ss)));
}

namespace {

HebbianCircuitSpec hebbian_spec(const Params& p) {
    HebbianCircuitSpec s;
    s.i_spd = p.num("i_spd");
    return s;
}

}  // namespace

void experiment_fig6b(const Params& p, const ExperimentConfig& c, Output& out) {
    HebbianCircuitSpec spec = hebbian_spec(p);
    std::vector<double> isus = p.list("i_su");
    std::sort(isus.begin(), isus.end());
    std::vector<double> dts = p.list("delta_t");
    std::sort(dts.begin(), dts.end());
    spec.i_su = isus.back();
    const double sat = measure_hebbian_saturation(spec, p.integer("saturation_events"));
    const auto rows = sweep_hebbian_kernel(spec, dts, isus, sat, c.jobs);

    std::vector<std::vector<double>> table;
    std::vector<StdpKernel::Row> bridge;
    for (const auto& r : rows) {
        table.push_back({r.delta_t * 1e9, r.i_su * 1e6, static_cast<double>(r.fluxons), r.delta_i_ss, r.fraction});
        // The weakening half mirrors the strengthening half.
        bridge.push_back({r.delta_t * 1e9, r.i_su * 1e6, r.fraction});
        if (r.delta_t > 0) bridge.push_back({-r.delta_t * 1e9, r.i_su * 1e6, -r.fraction});
    }
    out.csv("fig6b_kernel.csv", {"delta_t_ns", "i_su_uA", "fluxons", "delta_i_ss", "fraction"}, table);
    std::ostringstream os;
    StdpKernel(bridge).write_csv(os);
    out.text("stdp_kernel.csv", os.str());
    out.plot("fig6b.plot.json", "Hebbian kernel by update-junction bias", "fig6b_kernel.csv", "delta_t_ns",
             "post - pre delay (ns)", {{"fraction", "delta I_ss / I_ss,sat"}});
    out.check("saturation current measured", sat > 0, ua(sat));

    for (const auto& r : rows)
        if (!r.error.empty()) out.check("kernel point", false, r.error);
    for (double isu : isus) {
        int prev = -1, worst = 0;
        for (const auto& r : rows) {
            if (r.i_su != isu) continue;
            if (prev >= 0) worst = std::max(worst, r.fluxons - prev);
            prev = r.fluxons;
        }
        out.check("kernel non-increasing at " + ua(isu), worst <= 1,
                  "largest rise " + std::to_string(worst) + " fluxons");
    }
    const double ref = kernel_integral(rows, isus.back());
    const std::map<double, std::pair<double, double>> bands = {
        {35e-6, {0.01, 0.10}}, {36e-6, {0.08, 0.28}}, {37e-6, {0.38, 0.58}}};
    for (double isu : isus) {
        const auto it = std::find_if(bands.begin(), bands.end(),
                                     [&](const auto& b) { return std::abs(b.first - isu) < 1e-9; });
        if (it == bands.end()) continue;
        const double ratio = ref > 0 ? kernel_integral(rows, isu) / ref : 0.0;
        out.check("kernel integral ratio at " + ua(isu),
                  ratio >= it->second.first && ratio <= it->second.second, fmt(ratio));
    }
    if (isus.size() > 1) {
        int lo = 0, hi = 0;
        for (const auto& r : rows)
            if (r.delta_t == dts.front()) {
                if (r.i_su == isus.front()) lo = r.fluxons;
                if (r.i_su == isus.back()) hi = r.fluxons;
            }
        out.check("higher bias updates more at smallest delay", hi > lo,
                  std::to_string(hi) + " vs " + std::to_string(lo) + " fluxons");
    }
}

void experiment_fig7(const Params& p, const ExperimentConfig&, Output& out) {
    HebbianCircuitSpec base = hebbian_spec(p);
    base.i_su = p.num("i_su");
    for (double dt : p.list("delta_t")) {
        HebbianCircuitSpec s = base;
        s.pre_photons = {1e-9};
        s.post_photons = {1e-9 + dt};
        const Netlist n = build_hebbian_circuit(s);
        SimOptions o = hebbian_options(s, 1e-9 + dt + 60e-9);
        o.probes = {kIssColumn, "I(L1)", "I(L2)", "I(L3)", "V(m)"};
        const Trace tr = run_transient(assemble(n), o);
        const std::string tag = "fig7_dt" + fmt(dt * 1e9) + "ns";
        write_trace(out, tag + "_trace.csv", tr);
        write_fluxons_csv(out.path(tag + "_fluxons.csv"), tr);
        out.add(tag + "_fluxons.csv");
        out.plot(tag + ".plot.json", "Coincidence event, delay " + fmt(dt * 1e9) + " ns", tag + "_trace.csv", "t",
                 "time (s)",
                 {{"I(L1)", "SPD1 branch (A)"}, {"I(L2)", "SPD2 branch (A)"}, {"I(L3)", "J_su branch (A)"},
                  {kIssColumn, "I_ss (A)"}});
        const int fl = count_fluxons(tr, "Bsu");
        if (dt == 0.0) out.check("fluxons at zero delay 106 +-20%", within(fl, 106, 0.20), std::to_string(fl));
        else if (std::abs(dt - 25e-9) < 1e-12)
            out.check("fluxons at 25 ns delay 13 +-3", std::abs(fl - 13) <= 3, std::to_string(fl));
    }
}

void experiment_fig8(const Params& p, const ExperimentConfig&, Output& out) {
    StdpCircuitSpec spec;
    spec.buffered = p.flag("buffered");
    const double gap = p.num("spacing");
    const double t0 = 10e-9;
    spec.add_strengthening(t0, 20e-9);
    spec.add_weakening(t0 + gap, 10e-9);
    spec.add_weakening(t0 + 2 * gap, 25e-9);
    spec.add_strengthening(t0 + 3 * gap, 5e-9);
    const Netlist n = build_stdp_circuit(spec);
    SimOptions o = stdp_options(spec, t0 + 4 * gap);
    o.probes = {kIsyColumn, kIssColumn};
    const Trace tr = run_transient(assemble(n), o);
    write_trace(out, "fig8_trace.csv", tr);
    write_fluxons_csv(out.path("fig8_fluxons.csv"), tr);
    out.add("fig8_fluxons.csv");

    std::vector<double> level;
    for (int k = 0; k <= 4; ++k) level.push_back(tr.value_at(kIsyColumn, t0 + k * gap - 5e-9));
    std::vector<std::vector<double>> rows;
    const double delays[] = {20, -10, -25, 5};
    std::vector<double> d;
    for (int k = 0; k < 4; ++k) {
        d.push_back(level[k + 1] - level[k]);
        rows.push_back({t0 + k * gap, delays[k], d.back()});
    }
    out.csv("fig8_events.csv", {"t", "delta_t_ns", "delta_i_sy"}, rows);
    out.plot("fig8.plot.json", "Four-event STDP sequence", "fig8_trace.csv", "t", "time (s)",
             {{kIsyColumn, "I_sy (A)"}, {kIssColumn, "I_ss (A)"}});
    const bool signs = d[0] > 0 && d[1] < 0 && d[2] < 0 && d[3] > 0;
    out.check("signed steps +,-,-,+", signs, na(d[0]) + ", " + na(d[1]) + ", " + na(d[2]) + ", " + na(d[3]));
    out.check("10 ns weakening exceeds 25 ns", std::abs(d[1]) > std::abs(d[2]),
              na(std::abs(d[1])) + " vs " + na(std::abs(d[2])));
}

void experiment_retention(const Params& p, const ExperimentConfig& c, Output& out) {
    RetentionParams base;
    base.population = p.integer("population");
    base.q = p.num("q");
    base.f_plus = p.num("f_plus");
    base.f_minus = p.num("f_minus");
    base.rate = p.num("rate");
    const std::string& b = p.str("bounds");
    if (b != "hard" && b != "soft") throw ConfigError("bounds must be hard or soft");
    base.bounds = b == "hard" ? BoundMode::hard : BoundMode::soft;
    base.t_grid = retention_grid(p.num("t_min"), p.num("t_max"), p.integer("t_count"));
    base.seed = c.seed;
    base.jobs = c.jobs;

    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> snr(base.t_grid.size());
    for (std::size_t k = 0; k < base.t_grid.size(); ++k) snr[k].push_back(base.t_grid[k]);
    std::vector<std::vector<double>> summary;
    std::map<int, double> lifetime;
    std::vector<std::pair<std::string, std::string>> series;
    for (double sv : p.list("states")) {
        RetentionParams r = base;
        r.states = static_cast<int>(sv);
        const RetentionResult res = retention_experiment(r);
        const std::string name = "retention_states" + std::to_string(r.states) + ".csv";
        std::ostringstream os;
        write_retention_csv(os, res);
        out.text(name, os.str());
        header.push_back("snr_" + std::to_string(r.states));
        series.emplace_back(header.back(), "1/alpha = " + std::to_string(r.states));
        for (std::size_t k = 0; k < res.snr.size(); ++k) snr[k].push_back(res.snr[k]);
        summary.push_back({static_cast<double>(r.states), res.lifetime, res.snr.size() > 1 ? res.snr[1] : 0.0});
        lifetime[r.states] = res.lifetime;
    }
    out.csv("retention_snr.csv", header, snr);
    out.csv("retention_lifetime.csv", {"states", "lifetime", "snr0"}, summary);
    out.plot("retention.plot.json", "Memory SNR by number of states", "retention_snr.csv", "t",
             "time (1/r)", series);
    if (lifetime.count(8) && lifetime.count(64)) {
        const double ratio = lifetime[64] / lifetime[8];
        out.check("lifetime(64)/lifetime(8) in 4..16", ratio >= 4 && ratio <= 16, fmt(ratio));
    }
}

}  // namespace soen::detail
