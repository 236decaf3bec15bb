#include "soen/synapse_library.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace soen {

namespace {

// A fast bias ramp pushes most of I_spd through L3 and slips Bsu before t = 0;
// ramping over several L/r times keeps the storage loop empty.
constexpr double kHebbianRamp = 500e-9;

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, std::string(field) + " must be positive");
}

void require_coupling(double k, const char* field) {
    if (!(std::abs(k) < 1.0)) throw ValidationError(field, std::string(field) + " must satisfy |k| < 1");
}

void require_sorted(const std::vector<double>& ts, double min_gap, const char* field) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!std::isfinite(ts[i]) || ts[i] < 0.0)
            throw ValidationError(field, std::string(field) + " must be non-negative");
        if (i > 0 && ts[i] < ts[i - 1] + min_gap)
            throw ValidationError(field, std::string(field) + " must be increasing and non-overlapping");
    }
}

SpdParams spd_params(const HebbianCircuitSpec& spec, std::vector<double> photons) {
    SpdParams p;
    p.hotspot_resistance = spec.hotspot_resistance;
    p.hotspot_duration = spec.hotspot_duration;
    p.photon_arrival_times = std::move(photons);
    return p;
}

// SPD branches and the update junction Bsu<tag> at node m<tag>.
void add_hebbian_front(Netlist& n, const HebbianCircuitSpec& s, const std::string& tag) {
    const std::string in = "n" + tag, m = "m" + tag;
    n.add_source("Ispd" + tag, kGround, in, Waveform::dc(s.i_spd));
    n.add_spd("S1" + tag, in, "n1" + tag, spd_params(s, s.pre_photons));
    n.add_inductor("L1" + tag, "n1" + tag, kGround, s.l1);
    n.add_spd("S2" + tag, in, "n2" + tag, spd_params(s, s.post_photons));
    n.add_inductor("L2" + tag, "n2" + tag, "n2r" + tag, s.l2);
    n.add_resistor("R1" + tag, "n2r" + tag, kGround, s.r1());
    n.add_inductor("L3" + tag, in, "n3" + tag, s.l3);
    n.add_resistor("R2" + tag, "n3" + tag, m, s.r2());
    n.add_junction("Bsu" + tag, m, kGround, s.junction);
    n.add_source("Isu" + tag, kGround, m, Waveform::dc(s.i_su));
}

// SB loop L2–L3–Lsy read out from the SS-side inductor `ss_inductor`, biased
// from the I1 line through L4/L3. Returns the node feeding the synapse port.
void add_sb_loop(Netlist& n, const std::string& ss_inductor, double l2, double l3, double l4,
                 double k_ss_sb, double k_sb_i1, double i1) {
    n.add_inductor("L2", "s1", kGround, l2);
    n.add_inductor("L3", "s1", "s2", l3);
    n.add_inductor("L4", "i1", kGround, l4);
    n.add_source("I1", kGround, "i1", Waveform::dc(i1));
    n.add_coupling("K1", ss_inductor, "L2", k_ss_sb);
    n.add_coupling("K2", "L3", "L4", k_sb_i1);
}

std::vector<KernelPoint> run_points(const HebbianCircuitSpec& spec,
                                    const std::vector<std::pair<double, double>>& grid, double i_ss_sat,
                                    int jobs) {
    std::vector<KernelPoint> rows(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            HebbianCircuitSpec s = spec;
            s.i_su = grid[i].second;
            try {
                rows[i] = hebbian_event(s, grid[i].first, i_ss_sat);
            } catch (const std::exception& e) {
                rows[i].delta_t = grid[i].first;
                rows[i].i_su = grid[i].second;
                rows[i].error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

}  // namespace

Waveform pulse_schedule(const std::vector<double>& starts, double amplitude, double rise, double high,
                        double fall) {
    if (starts.empty()) return Waveform::dc(0.0);
    std::vector<std::pair<double, double>> pts;
    for (double s : starts) {
        pts.emplace_back(s, 0.0);
        pts.emplace_back(s + rise, amplitude);
        pts.emplace_back(s + rise + high, amplitude);
        pts.emplace_back(s + rise + high + fall, 0.0);
    }
    return Waveform::piecewise_linear(std::move(pts));
}

void BinaryCellSpec::validate() const {
    for (auto [v, f] : {std::pair{l_ss, "l_ss"}, {i_b1, "i_b1"}, {i_b2, "i_b2"}, {l1, "l1"}, {l2, "l2"},
                        {l3, "l3"}, {l4, "l4"}, {l_sy, "l_sy"}, {drive_amplitude, "drive_amplitude"},
                        {drive_rise, "drive_rise"}})
        require_positive(v, f);
    if (!(drive_high >= 0.0)) throw ValidationError("drive_high", "drive_high must be non-negative");
    if (!(l_ss > l1)) throw ValidationError("l_ss", "l_ss must exceed l1, which it includes");
    require_coupling(k_ss_sb, "k_ss_sb");
    require_coupling(k_sb_i1, "k_sb_i1");
    const double bl = beta_l_over_2pi();
    if (!(bl > 1.0 && bl < 3.0))
        throw ValidationError("l_ss", "single-fluxon cell needs 1 < L_ss*Ic/Phi0 < 3");
    const double width = 2.0 * drive_rise + drive_high;
    require_sorted(potentiate_times, width, "potentiate_times");
    require_sorted(depress_times, width, "depress_times");
}

Netlist build_binary_cell(const BinaryCellSpec& s) {
    s.validate();
    Netlist n;
    n.add_junction("Bsu", "a", kGround, s.junction);
    n.add_inductor("Lss", "a", "b", s.l_ss - s.l1);
    n.add_inductor("L1", "b", "c", s.l1);
    n.add_junction("Bss", "c", kGround, s.junction);
    n.add_source("Ib1", kGround, "a", Waveform::dc(s.i_b1));
    n.add_source("Ib2", kGround, "c", Waveform::dc(s.i_b2));
    n.add_inductor("Lsy", "s2", kGround, s.l_sy);
    // The I1 line draws current so that the empty cell sits at the low I_sy state.
    add_sb_loop(n, "L1", s.l2, s.l3, s.l4, s.k_ss_sb, s.k_sb_i1, -s.i1);
    n.add_source("Ip", kGround, "a",
                 pulse_schedule(s.potentiate_times, s.drive_amplitude, s.drive_rise, s.drive_high, s.drive_rise));
    n.add_source("Im", kGround, "c",
                 pulse_schedule(s.depress_times, s.drive_amplitude, s.drive_rise, s.drive_high, s.drive_rise));
    n.tran().dt_max = 0.5e-12;
    n.tran().ramp_time = 0.5e-9;
    n.tran().settle_time = 0.2e-9;
    n.tran().t_stop = 1e-9;
    require_valid(n);
    return n;
}

MultiStableCellSpec MultiStableCellSpec::preset_20n() { return MultiStableCellSpec{}; }

MultiStableCellSpec MultiStableCellSpec::preset_200n() {
    MultiStableCellSpec s;
    s.l_ss = 200e-9;
    return s;
}

std::vector<double> MultiStableCellSpec::train(double start, int count) const {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(start + i * drive_period);
    return out;
}

void MultiStableCellSpec::validate() const {
    for (auto [v, f] : {std::pair{l_ss, "l_ss"}, {l_c, "l_c"}, {conv_l1, "conv_l1"}, {conv_l2, "conv_l2"},
                        {conv_l3, "conv_l3"}, {i_ss_b, "i_ss_b"}, {sb_l2, "sb_l2"}, {sb_l3, "sb_l3"},
                        {sb_l4, "sb_l4"}, {l_sy, "l_sy"}, {drive_amplitude, "drive_amplitude"},
                        {drive_rise, "drive_rise"}, {drive_fall, "drive_fall"}, {drive_period, "drive_period"}})
        require_positive(v, f);
    if (!(drive_high >= 0.0)) throw ValidationError("drive_high", "drive_high must be non-negative");
    if (!(drive_period > drive_rise + drive_high + drive_fall))
        throw ValidationError("drive_period", "drive_period must exceed the pulse width");
    require_coupling(k_ss_sb, "k_ss_sb");
    require_coupling(k_sb_i1, "k_sb_i1");
    const double width = drive_rise + drive_high + drive_fall;
    require_sorted(potentiate_times, width, "potentiate_times");
    require_sorted(depress_times, width, "depress_times");
}

Netlist build_multistable_cell(const MultiStableCellSpec& s) {
    s.validate();
    Netlist n;
    n.add_junction("Bp", "p", kGround, s.junction);
    n.add_junction("Bq", "q", kGround, s.junction);
    n.add_inductor("Lss", "p", "m", s.l_ss);
    n.add_inductor("Lc", "m", "q", s.l_c);
    n.add_source("Ibp", kGround, "p", Waveform::dc(s.i_ss_b));
    n.add_source("Ibq", kGround, "q", Waveform::dc(s.i_ss_b));
    for (const std::string x : {"P", "M"}) {
        const std::string in = "i" + x, a = "a" + x, b = "b" + x, out = x == "P" ? "p" : "q";
        n.add_inductor("L1" + x, in, kGround, s.conv_l1);
        n.add_junction("Be" + x, in, a, s.junction);
        n.add_junction("B" + x, a, kGround, s.junction);
        n.add_inductor("L2" + x, a, b, s.conv_l2);
        n.add_inductor("L3" + x, b, out, s.conv_l3);
        n.add_source("Ia" + x, kGround, a, Waveform::dc(s.conv_bias_a));
        n.add_source("Ib" + x, kGround, b, Waveform::dc(s.conv_bias_b));
        n.add_source("Ii" + x, kGround, in, Waveform::dc(s.conv_bias_in));
        const auto& times = x == "P" ? s.potentiate_times : s.depress_times;
        n.add_source("I" + std::string(x == "P" ? "plus" : "minus"), kGround, in,
                     pulse_schedule(times, s.drive_amplitude, s.drive_rise, s.drive_high, s.drive_fall));
    }
    n.add_inductor("Lsy", "s2", kGround, s.l_sy);
    // Coupling signs make I_sy positive and rising as flux is added through Bp.
    add_sb_loop(n, "Lc", s.sb_l2, s.sb_l3, s.sb_l4, s.k_ss_sb, -s.k_sb_i1, s.i1);
    n.tran().dt_max = 10e-12;
    n.tran().ramp_time = 2e-9;
    n.tran().settle_time = 1e-9;
    n.tran().t_stop = 4e-9;
    require_valid(n);
    return n;
}

void HebbianCircuitSpec::validate() const {
    for (auto [v, f] : {std::pair{l1, "l1"}, {l2, "l2"}, {l3, "l3"}, {tau1, "tau1"}, {tau2, "tau2"},
                        {i_spd, "i_spd"}, {i_su, "i_su"}, {i_ss_b, "i_ss_b"}, {l_ss, "l_ss"},
                        {hotspot_resistance, "hotspot_resistance"}, {hotspot_duration, "hotspot_duration"}})
        require_positive(v, f);
    if (!(l3 >= 10.0 * l2)) throw ValidationError("l3", "design requires L3 >= 10 L2");
    if (!(l1 >= 10.0 * l3)) throw ValidationError("l1", "design requires L1 >= 10 L3");
    require_sorted(pre_photons, hotspot_duration, "pre_photons");
    require_sorted(post_photons, hotspot_duration, "post_photons");
}

Netlist build_hebbian_circuit(const HebbianCircuitSpec& s) {
    s.validate();
    Netlist n;
    add_hebbian_front(n, s, "");
    n.add_inductor("Lss", "m", "p", s.l_ss);
    n.add_junction("Bss", "p", kGround, s.junction);
    n.add_source("Iss", kGround, "p", Waveform::dc(s.i_ss_b));
    n.tran().dt_max = 20e-12;
    n.tran().ramp_time = kHebbianRamp;
    n.tran().settle_time = 10.0 * s.tau1;
    n.tran().t_stop = 100e-9;
    require_valid(n);
    return n;
}

SimOptions hebbian_options(const HebbianCircuitSpec& spec, double t_stop) {
    SimOptions o;
    o.t_stop = t_stop;
    o.dt_max = 20e-12;
    o.ramp_time = kHebbianRamp;
    o.settle_time = 10.0 * spec.tau1;
    o.sample_interval = 50e-12;
    return o;
}

StdpCircuitSpec::StdpCircuitSpec() {
    strengthen.l_ss = l_ss;
    weaken.l_ss = l_ss;
}

void StdpCircuitSpec::add_strengthening(double t, double delay) {
    strengthen.pre_photons.push_back(t);
    strengthen.post_photons.push_back(t + delay);
}

void StdpCircuitSpec::add_weakening(double t, double delay) {
    weaken.pre_photons.push_back(t);
    weaken.post_photons.push_back(t + delay);
}

void StdpCircuitSpec::validate() const {
    strengthen.validate();
    weaken.validate();
    for (auto [v, f] : {std::pair{l_ss, "l_ss"}, {l_c, "l_c"}, {sb_l2, "sb_l2"}, {sb_l3, "sb_l3"},
                        {sb_l4, "sb_l4"}, {l_sy, "l_sy"}, {l_buffer, "l_buffer"}})
        require_positive(v, f);
    require_coupling(k_ss_sb, "k_ss_sb");
    require_coupling(k_sb_i1, "k_sb_i1");
}

Netlist build_stdp_circuit(const StdpCircuitSpec& s) {
    s.validate();
    Netlist n;
    add_hebbian_front(n, s.strengthen, "S");
    add_hebbian_front(n, s.weaken, "W");
    n.add_inductor("Lss", "mS", "x", s.l_ss);
    n.add_inductor("Lc", "x", "mW", s.l_c);
    if (s.buffered) {
        // Synapse port through the buffer stage into the synaptic firing junction.
        n.add_inductor("Lsy", "s2", "y", s.l_sy);
        n.add_junction("Bb2", "y", "z", s.buffer2);
        n.add_junction("Bb1", "z", "w", s.buffer1);
        n.add_inductor("Lsf", "w", "f", s.l_buffer);
        n.add_junction("Bsf", "f", kGround, s.firing);
    } else {
        n.add_inductor("Lsy", "s2", kGround, s.l_sy);
    }
    add_sb_loop(n, "Lc", s.sb_l2, s.sb_l3, s.sb_l4, s.k_ss_sb, -s.k_sb_i1, s.i1);
    n.tran().dt_max = 20e-12;
    n.tran().ramp_time = kHebbianRamp;
    n.tran().settle_time = 10.0 * std::max(s.strengthen.tau1, s.weaken.tau1);
    n.tran().t_stop = 300e-9;
    require_valid(n);
    return n;
}

SimOptions stdp_options(const StdpCircuitSpec& spec, double t_stop) {
    SimOptions o = hebbian_options(spec.strengthen, t_stop);
    o.settle_time = 10.0 * std::max(spec.strengthen.tau1, spec.weaken.tau1);
    return o;
}

const std::vector<double>& measure_isy(const Trace& trace) {
    if (!trace.has(kIsyColumn)) throw std::invalid_argument("trace has no synapse-port probe I(Lsy)");
    return trace.series(kIsyColumn);
}

double quiescent_isy(const Trace& trace, double t0, double t1) {
    measure_isy(trace);
    return trace.mean(kIsyColumn, t0, t1);
}

KernelPoint hebbian_event(const HebbianCircuitSpec& spec, double delta_t, double i_ss_sat) {
    HebbianCircuitSpec s = spec;
    const double t1 = 1e-9;
    s.pre_photons = {t1};
    s.post_photons = {t1 + delta_t};
    const Netlist n = build_hebbian_circuit(s);
    SimOptions o = hebbian_options(s, t1 + delta_t + 60e-9);
    o.probes = {kIssColumn};
    const Trace tr = run_transient(assemble(n), o);
    KernelPoint k;
    k.delta_t = delta_t;
    k.i_su = s.i_su;
    k.fluxons = count_fluxons(tr, "Bsu");
    k.delta_i_ss = tr.series(kIssColumn).back() - tr.series(kIssColumn).front();
    k.fraction = i_ss_sat > 0.0 ? k.delta_i_ss / i_ss_sat : 0.0;
    return k;
}

double measure_hebbian_saturation(const HebbianCircuitSpec& spec, int max_events) {
    // Coincident events spaced by several τ1, until the loop stops accepting flux.
    HebbianCircuitSpec s = spec;
    const double spacing = 6.0 * s.tau1;
    for (int i = 0; i < max_events; ++i) {
        s.pre_photons.push_back(1e-9 + i * spacing);
        s.post_photons.push_back(1e-9 + i * spacing);
    }
    SimOptions o = hebbian_options(s, 1e-9 + max_events * spacing);
    o.probes = {kIssColumn};
    o.sample_interval = 1e-9;
    const Trace tr = run_transient(assemble(build_hebbian_circuit(s)), o);
    return tr.series(kIssColumn).back() - tr.series(kIssColumn).front();
}

std::vector<KernelPoint> sweep_hebbian_kernel(const HebbianCircuitSpec& spec, const std::vector<double>& delta_ts,
                                              const std::vector<double>& i_sus, double i_ss_sat, int jobs) {
    std::vector<std::pair<double, double>> grid;
    for (double isu : i_sus)
        for (double dt : delta_ts) grid.emplace_back(dt, isu);
    return run_points(spec, grid, i_ss_sat, jobs);
}

double kernel_integral(const std::vector<KernelPoint>& rows, double i_su) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows)
        if (std::abs(r.i_su - i_su) < 1e-12 && r.error.empty()) pts.emplace_back(r.delta_t, r.fluxons);
    std::sort(pts.begin(), pts.end());
    double sum = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        sum += 0.5 * (pts[i].second + pts[i - 1].second) * (pts[i].first - pts[i - 1].first);
    return sum;
}

}  // namespace soen
