// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "markov_oracle.hpp"
#include "soen/harness.hpp"
#include "soen/retention.hpp"
#include "soen/synapse_library.hpp"
#include "soen/transient_engine.hpp"

using namespace soen;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        passed = passed && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "[x] ") + what;
    }
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("soen_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// Folds the checks of one experiment run into the outcome.
void experiment(Outcome& o, const std::string& id, const std::string& overrides = "") {
    ExperimentConfig c = parse_config("experiment = " + id + "\n" + overrides);
    c.out_dir = scratch(id).string();
    const RunReport r = run_experiment(c);
    for (const auto& chk : r.checks) o.require(chk.passed, id + " " + chk.name + " (" + chk.detail + ")");
}

Outcome rsj_oracle() {
    Outcome o;
    const double ic = 40e-6, r = 5.0, bias = 80e-6;
    Netlist n;
    n.add_junction("B1", "a", kGround, make_junction(ic, 0.01, r));
    n.add_source("Ib", kGround, "a", Waveform::dc(bias));
    SimOptions opt;
    opt.t_stop = 300e-12;
    opt.dt_max = 0.2e-12;
    opt.ramp_time = 50e-12;
    opt.settle_time = 50e-12;
    const Trace tr = run_transient(assemble(n), opt);
    const double t0 = 100e-12, t1 = opt.t_stop;
    const double v = (tr.value_at("P(B1)", t1) - tr.value_at("P(B1)", t0)) * kPhaseToFlux / (t1 - t0);
    const double want = r * std::sqrt(bias * bias - ic * ic);
    o.require(std::abs(v - want) <= 0.02 * want, "mean V " + num(v * 1e6) + " uV vs " + num(want * 1e6) + " uV");
    return o;
}

Outcome flux_quantization() {
    Outcome o;
    std::mt19937_64 g(2718);
    double worst = 0.0;
    int loops = 0;
    for (int trial = 0; trial < 50; ++trial) {
        auto spec = trial % 2 ? MultiStableCellSpec::preset_20n() : MultiStableCellSpec::preset_200n();
        const int pulses = 1 + static_cast<int>(g() % 12);
        double t = 1e-9;
        for (int k = 0; k < pulses; ++k) {
            (g() & 1 ? spec.potentiate_times : spec.depress_times).push_back(t);
            t += spec.drive_period * (1 + static_cast<int>(g() % 2));
        }
        const Netlist n = build_multistable_cell(spec);
        SimOptions opt = SimOptions::from(n.tran());
        opt.t_stop = t + spec.drive_period;
        opt.probes = {kIsyColumn};
        const SimSystem sys = assemble(n);
        const Trace tr = run_transient(sys, opt);
        for (const auto& loop : loop_fluxes(sys, tr.final_state)) {
            worst = std::max(worst, std::abs(loop.flux_quanta - std::round(loop.flux_quanta)));
            ++loops;
        }
    }
    o.require(loops > 0 && worst <= 1e-3,
              "50 schedules, " + std::to_string(loops) + " loop checks, worst deviation " + num(worst) + " flux quanta");
    return o;
}

Outcome binary_cell() {
    Outcome o;
    experiment(o, "fig3");
    return o;
}

Outcome multistable() {
    Outcome o;
    experiment(o, "fig5a");
    experiment(o, "fig5bc");
    return o;
}

Outcome hebbian_kernel() {
    Outcome o;
    experiment(o, "fig7");
    experiment(o, "fig6b");
    return o;
}

Outcome stdp_sequence() {
    Outcome o;
    experiment(o, "fig8");
    return o;
}

Outcome retention() {
    Outcome o;
    double worst = 0.0;
    for (int states : {1, 2, 4}) {
        RetentionParams p;
        p.population = 10000;
        p.states = states;
        p.q = 1.0;
        p.t_grid = {0.0, 0.5, 1, 2, 4, 8, 16, 32};
        p.seed = 5;
        const RetentionResult r = retention_experiment(p);
        for (std::size_t k = 0; k < r.t.size(); ++k) {
            const double want = oracle::expected_signal(p, r.t[k]);
            const double z = std::abs(r.signal[k] - want) / oracle::signal_sigma(p, want, r.signal_stderr[k]);
            worst = std::max(worst, z);
        }
    }
    o.require(worst <= 3.0, "Markov oracle worst deviation " + num(worst) + " sigma");
    experiment(o, "retention");
    return o;
}

Outcome determinism() {
    Outcome o;
    const std::string junction =
        "target = junction\n[junction]\nt_stop = 100p\ndt_max = 0.5p\nt_avg = 50p\n"
        "[grid]\nbias = 50u, 80u, 120u\nbeta_c = 0.01, 0.5\n";
    const std::string ret = "target = retention\n[retention]\npopulation = 2000\n[grid]\nstates = 2, 8\nq = 0.5, 1\n";
    for (const auto& [name, text] : {std::pair{"junction", junction}, std::pair{"retention", ret}}) {
        std::string first;
        for (int jobs : {1, 4, 8}) {
            ExperimentConfig c = parse_config(text);
            c.jobs = jobs;
            c.seed = 9;
            c.out_dir = scratch(std::string("det_") + name + std::to_string(jobs)).string();
            run_sweep(c);
            const std::string csv = slurp(fs::path(c.out_dir) / "sweep.csv");
            if (first.empty()) first = csv;
            o.require(csv == first, std::string(name) + " sweep jobs=" + std::to_string(jobs));
        }
    }
    RetentionParams p;
    p.population = 4000;
    p.t_grid = retention_grid(0.1, 100, 20);
    p.seed = 3;
    std::ostringstream a, b;
    p.jobs = 1;
    write_retention_csv(a, retention_experiment(p));
    p.jobs = 8;
    write_retention_csv(b, retention_experiment(p));
    o.require(a.str() == b.str(), "retention run jobs=1 vs 8");
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "RSJ oracle", 5, rsj_oracle},
        {2, "flux quantization", 120, flux_quantization},
        {3, "binary cell", 30, binary_cell},
        {4, "multi-stable staircase", 600, multistable},
        {5, "Hebbian kernel", 900, hebbian_kernel},
        {6, "STDP sequence", 120, stdp_sequence},
        {7, "behavioral retention", 120, retention},
        {8, "determinism", 600, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(s <= c.budget_s, "runtime " + num(s) + " s of " + num(c.budget_s) + " s");
        failed += !o.passed;
        std::printf("%s criterion %d %s: %s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
