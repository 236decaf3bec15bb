#include "soen/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "harness_internal.hpp"
#include "soen/circuit_model.hpp"
#include "soen/netlist_parser.hpp"
#include "soen/retention.hpp"
#include "soen/synapse_library.hpp"
#include "soen/trace_io.hpp"
#include "soen/transient_engine.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace soen {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_number(const std::string& key, const std::string& v) {
    std::string err;
    const auto d = parse_si_number(v, &err);
    if (!d) throw ConfigError(key + ": " + (err.empty() ? "not a number: " + v : err));
    return *d;
}

using Defaults = std::map<std::string, std::map<std::string, std::string>>;

const Defaults& defaults() {
    static const Defaults d = {
        {"fig3", {{"cycles", "3"}, {"period", "50p"}, {"repeats", "3"}, {"settle", "100p"}}},
        {"fig5a", {{"l_ss", "200n"}, {"pulses", "700"}}},
        {"fig5bc", {{"l_ss", "20n"}, {"pulses", "110"}, {"cycles", "20"}}},
        {"fig6b",
         {{"i_spd", "7u"}, {"i_su", "35u,36u,37u,38u"}, {"delta_t", "0,5n,10n,15n,20n,25n,35n,50n,75n,100n"},
          {"saturation_events", "60"}}},
        {"fig7", {{"i_spd", "7u"}, {"i_su", "38u"}, {"delta_t", "0,25n"}}},
        {"fig8", {{"spacing", "100n"}, {"buffered", "0"}}},
        {"retention",
         {{"states", "1,2,4,8,16,32,64"}, {"population", "10000"}, {"q", "0.5"}, {"f_plus", "0.52"},
          {"f_minus", "0.48"}, {"rate", "1"}, {"bounds", "hard"}, {"t_min", "0.1"}, {"t_max", "5000"},
          {"t_count", "120"}}},
        {"custom", {{"netlist", ""}, {"t_stop", "0"}, {"dt_max", "0"}}},
        {"junction", {{"bias", "80u"}, {"beta_c", "0.01"}, {"ic", "40u"}, {"r", "5"}, {"t_stop", "200p"},
                      {"dt_max", "0.2p"}, {"t_avg", "100p"}}},
        {"hebbian", {{"delta_t", "0"}, {"i_su", "38u"}, {"i_spd", "7u"}}},
        {"sweep_retention",
         {{"states", "8"}, {"population", "10000"}, {"q", "0.5"}, {"f_plus", "0.52"}, {"f_minus", "0.48"},
          {"rate", "1"}, {"bounds", "hard"}, {"t_min", "0.1"}, {"t_max", "5000"}, {"t_count", "120"}}},
    };
    return d;
}

// Sweep target "retention" shares its section name with the experiment.
std::string defaults_key(const std::string& name, bool sweep) {
    return sweep && name == "retention" ? "sweep_retention" : name;
}

const std::set<std::string> kTopKeys = {"experiment", "target", "seed", "jobs", "out"};

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig c;
    std::string section;
    std::set<std::string> seen_top;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            const auto& d = defaults();
            if (section != "grid" && (!d.count(section) || section == "sweep_retention"))
                throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "empty key");
        if (section.empty()) {
            if (!kTopKeys.count(key)) throw ConfigError(where + "unknown key '" + key + "'");
            if (!seen_top.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
            if (key == "experiment") c.experiment = value;
            else if (key == "target") c.target = value;
            else if (key == "out") c.out_dir = value;
            else if (key == "seed") {
                try {
                    std::size_t pos = 0;
                    c.seed = std::stoull(value, &pos);
                    if (pos != value.size()) throw std::invalid_argument(value);
                } catch (const std::exception&) {
                    throw ConfigError(where + "seed must be a non-negative integer");
                }
            } else {
                const double j = to_number(key, value);
                if (j < 1 || j != std::floor(j)) throw ConfigError(where + "jobs must be a positive integer");
                c.jobs = static_cast<int>(j);
            }
        } else if (section == "grid") {
            for (const auto& [k, _] : c.grid)
                if (k == key) throw ConfigError(where + "duplicate grid key '" + key + "'");
            auto values = split_list(value);
            if (values.empty()) throw ConfigError(where + "grid key '" + key + "' has no values");
            c.grid.emplace_back(key, std::move(values));
        } else {
            auto& sec = c.sections[section];
            if (!sec.emplace(key, value).second) throw ConfigError(where + "duplicate key '" + key + "'");
        }
    }
    // Key checks against the defaults of the named section.
    for (const auto& [name, kv] : c.sections) {
        const auto& d = defaults().at(name);
        for (const auto& [k, _] : kv)
            if (!d.count(k)) throw ConfigError("[" + name + "]: unknown key '" + k + "'");
    }
    if (!c.experiment.empty() &&
        std::find(experiment_ids().begin(), experiment_ids().end(), c.experiment) == experiment_ids().end())
        throw ConfigError("unknown experiment '" + c.experiment + "'");
    if (!c.target.empty() &&
        std::find(sweep_targets().begin(), sweep_targets().end(), c.target) == sweep_targets().end())
        throw ConfigError("unknown sweep target '" + c.target + "'");
    if (!c.target.empty()) {
        const auto& d = defaults().at(defaults_key(c.target, true));
        for (const auto& [k, _] : c.grid)
            if (!d.count(k)) throw ConfigError("[grid]: unknown key '" + k + "' for target " + c.target);
    } else if (!c.grid.empty()) {
        throw ConfigError("[grid] requires a sweep target");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    try {
        return parse_config(os.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

bool RunReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids = {"fig3", "fig5a", "fig5bc", "fig6b",
                                                 "fig7", "fig8",  "retention", "custom"};
    return ids;
}

const std::vector<std::string>& sweep_targets() {
    static const std::vector<std::string> t = {"junction", "hebbian", "retention"};
    return t;
}

std::map<std::string, std::string> default_parameters(const std::string& name) {
    const auto it = defaults().find(name);
    if (it == defaults().end()) throw ConfigError("unknown experiment or target '" + name + "'");
    return it->second;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError("cannot open file: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char h[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(h, sizeof h, "%02x", md[i]);
        hex += h;
    }
    return hex;
}

namespace detail {

double Params::num(const std::string& key) const { return to_number(key, str(key)); }

int Params::integer(const std::string& key) const {
    const double v = num(key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key + ": expected an integer");
    return static_cast<int>(v);
}

std::vector<double> Params::list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split_list(str(key))) out.push_back(to_number(key, s));
    return out;
}

const std::string& Params::str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing parameter '" + key + "'");
    return it->second;
}

bool Params::flag(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError(key + ": expected a boolean");
}

Params resolve(const std::string& name, const ExperimentConfig& config) {
    auto values = default_parameters(name);
    const std::string section = name == "sweep_retention" ? "retention" : name;
    if (const auto it = config.sections.find(section); it != config.sections.end())
        for (const auto& [k, v] : it->second) {
            if (!values.count(k)) throw ConfigError("[" + section + "]: unknown key '" + k + "'");
            values[k] = v;
        }
    return Params(std::move(values));
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

Output::Output(std::string dir, RunReport& report) : dir_(std::move(dir)), report_(report) {
    fs::create_directories(dir_);
}

std::string Output::path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

void Output::add(const std::string& name) {
    if (std::find(report_.artifacts.begin(), report_.artifacts.end(), name) == report_.artifacts.end())
        report_.artifacts.push_back(name);
}

void Output::text(const std::string& name, const std::string& content) {
    fs::create_directories(fs::path(path(name)).parent_path());
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path(name));
    f << content;
    add(name);
}

void Output::csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
        s += "\n";
    }
    text(name, s);
}

void Output::plot(const std::string& name, const std::string& title, const std::string& csv_name,
                  const std::string& x_column, const std::string& x_label,
                  const std::vector<std::pair<std::string, std::string>>& series) {
    ordered_json j;
    j["title"] = title;
    j["data"] = csv_name;
    j["x"] = {{"column", x_column}, {"label", x_label}};
    j["series"] = ordered_json::array();
    for (const auto& [col, label] : series) j["series"].push_back({{"column", col}, {"label", label}});
    text(name, j.dump(2) + "\n");
}

void Output::check(const std::string& name, bool passed, const std::string& detail) {
    report_.checks.push_back({name, passed, detail});
}

}  // namespace detail

namespace {

using detail::fmt;
using detail::Output;
using detail::Params;

void write_manifest(const std::string& dir, const ordered_json& config, RunReport& report) {
    ordered_json m;
    m["config"] = config;
    ordered_json arts = ordered_json::object();
    for (const auto& a : report.artifacts) arts[a] = sha256_file((fs::path(dir) / a).string());
    m["artifacts"] = arts;
    m["checks"] = ordered_json::array();
    for (const auto& c : report.checks)
        m["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    m["ok"] = report.ok();
    std::ofstream f((fs::path(dir) / "manifest.json").string(), std::ios::binary);
    f << m.dump(2) << "\n";
}

ordered_json config_json(const ExperimentConfig& c, const std::string& kind, const std::string& name,
                         const Params& p) {
    ordered_json j;
    j["kind"] = kind;
    j["name"] = name;
    j["seed"] = c.seed;
    j["parameters"] = ordered_json(p.values());
    return j;
}

Netlist load_netlist(const std::string& path) {
    if (!fs::exists(path)) throw MissingFileError("cannot open netlist: " + path);
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception&) {
        throw MissingFileError("cannot open netlist: " + path);
    }
    auto r = parse_netlist(text);
    if (!r.ok()) {
        std::string msg;
        for (const auto& d : r.diagnostics)
            msg += path + ":" + std::to_string(d.span.line) + ":" + std::to_string(d.span.column) + ": " +
                   (d.severity == Severity::error ? "error: " : "warning: ") + d.message + "\n";
        throw NetlistError(msg.empty() ? path + ": invalid netlist" : msg);
    }
    return std::move(*r.netlist);
}

void simulate_into(const std::string& netlist_path, double t_stop, double dt_max, Output& out) {
    const Netlist n = load_netlist(netlist_path);
    SimOptions o = SimOptions::from(n.tran());
    if (t_stop > 0) o.t_stop = t_stop;
    if (dt_max > 0) o.dt_max = dt_max;
    const Trace tr = run_transient(assemble(n), o);
    write_trace_csv(out.path("trace.csv"), tr);
    out.add("trace.csv");
    write_fluxons_csv(out.path("fluxons.csv"), tr);
    out.add("fluxons.csv");
}

}  // namespace

RunReport run_simulation(const SimRequest& request) {
    RunReport report;
    Output out(request.out_dir, report);
    simulate_into(request.netlist_path, request.t_stop, request.dt_max, out);
    ordered_json cfg;
    cfg["kind"] = "sim";
    cfg["netlist"] = request.netlist_path;
    cfg["netlist_sha256"] = sha256_file(request.netlist_path);
    cfg["t_stop"] = request.t_stop;
    cfg["dt_max"] = request.dt_max;
    write_manifest(request.out_dir, cfg, report);
    return report;
}

RunReport run_experiment(const ExperimentConfig& config) {
    if (config.experiment.empty()) throw ConfigError("no experiment given");
    const Params p = detail::resolve(config.experiment, config);
    RunReport report;
    Output out(config.out_dir, report);
    const std::string& e = config.experiment;
    try {
        if (e == "fig3") detail::experiment_fig3(p, config, out);
        else if (e == "fig5a") detail::experiment_fig5a(p, config, out);
        else if (e == "fig5bc") detail::experiment_fig5bc(p, config, out);
        else if (e == "fig6b") detail::experiment_fig6b(p, config, out);
        else if (e == "fig7") detail::experiment_fig7(p, config, out);
        else if (e == "fig8") detail::experiment_fig8(p, config, out);
        else if (e == "retention") detail::experiment_retention(p, config, out);
        else if (e == "custom") {
            if (p.str("netlist").empty()) throw ConfigError("[custom]: netlist is required");
            simulate_into(p.str("netlist"), p.num("t_stop"), p.num("dt_max"), out);
        } else {
            throw ConfigError("unknown experiment '" + e + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const MissingFileError&) {
        throw;
    } catch (const NetlistError&) {
        throw;
    } catch (const std::exception& ex) {
        throw std::runtime_error("experiment " + e + ": " + ex.what());
    }
    write_manifest(config.out_dir, config_json(config, "experiment", e, p), report);
    return report;
}

namespace {

struct SweepPoint {
    std::vector<std::string> coords;  // raw grid values, declaration order
    std::vector<double> values;       // results
    std::string error;
};

double junction_point(const Params& p) {
    Netlist n;
    const double ic = p.num("ic");
    n.add_junction("J1", "a", kGround, make_junction(ic, p.num("beta_c"), p.num("r")));
    n.add_source("Ib", kGround, "a", Waveform::dc(p.num("bias")));
    SimOptions o;
    o.t_stop = p.num("t_stop");
    o.dt_max = p.num("dt_max");
    o.ramp_time = 50e-12;
    o.settle_time = 50e-12;
    o.probes = {"P(J1)"};
    const Trace tr = run_transient(assemble(n), o);
    const double t0 = std::max(0.0, o.t_stop - p.num("t_avg"));
    // Time average from the phase advance, exact for any step pattern.
    const double ph0 = tr.value_at("P(J1)", t0), ph1 = tr.value_at("P(J1)", o.t_stop);
    return (ph1 - ph0) * kPhaseToFlux / (o.t_stop - t0);
}

RetentionParams retention_params(const Params& p, const ExperimentConfig& c) {
    RetentionParams r;
    r.population = p.integer("population");
    r.states = p.integer("states");
    r.q = p.num("q");
    r.f_plus = p.num("f_plus");
    r.f_minus = p.num("f_minus");
    r.rate = p.num("rate");
    const std::string& b = p.str("bounds");
    if (b != "hard" && b != "soft") throw ConfigError("bounds must be hard or soft");
    r.bounds = b == "hard" ? BoundMode::hard : BoundMode::soft;
    r.t_grid = retention_grid(p.num("t_min"), p.num("t_max"), p.integer("t_count"));
    r.seed = c.seed;
    r.jobs = 1;
    return r;
}

}  // namespace

RunReport run_sweep(const ExperimentConfig& config) {
    if (config.target.empty()) throw ConfigError("no sweep target given");
    if (config.grid.empty()) throw ConfigError("sweep needs a [grid] section");
    const std::string dkey = defaults_key(config.target, true);
    const Params base = detail::resolve(dkey, config);

    // Each grid axis sorted by numeric value so rows come out lexicographic.
    std::vector<std::pair<std::string, std::vector<std::string>>> axes = config.grid;
    for (auto& [k, vals] : axes) {
        std::stable_sort(vals.begin(), vals.end(), [&](const std::string& a, const std::string& b) {
            return to_number(k, a) < to_number(k, b);
        });
        vals.erase(std::unique(vals.begin(), vals.end(),
                               [&](const std::string& a, const std::string& b) {
                                   return to_number(k, a) == to_number(k, b);
                               }),
                   vals.end());
    }
    std::vector<SweepPoint> points{{}};
    for (const auto& [k, vals] : axes) {
        std::vector<SweepPoint> next;
        for (const auto& pt : points)
            for (const auto& v : vals) {
                SweepPoint q = pt;
                q.coords.push_back(v);
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }

    std::vector<std::string> result_cols;
    if (config.target == "junction") result_cols = {"mean_voltage"};
    else if (config.target == "hebbian") result_cols = {"fluxons", "delta_i_ss"};
    else result_cols = {"lifetime", "snr0"};

    auto evaluate = [&](SweepPoint& pt) {
        auto values = base.values();
        for (std::size_t i = 0; i < axes.size(); ++i) values[axes[i].first] = pt.coords[i];
        const Params p(values);
        if (config.target == "junction") {
            pt.values = {junction_point(p)};
        } else if (config.target == "hebbian") {
            HebbianCircuitSpec s;
            s.i_spd = p.num("i_spd");
            s.i_su = p.num("i_su");
            const KernelPoint k = hebbian_event(s, p.num("delta_t"), 0.0);
            if (!k.error.empty()) throw std::runtime_error(k.error);
            pt.values = {static_cast<double>(k.fluxons), k.delta_i_ss};
        } else {
            const RetentionResult r = retention_experiment(retention_params(p, config));
            pt.values = {r.lifetime, r.snr.size() > 1 ? r.snr[1] : 0.0};
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                evaluate(points[i]);
            } catch (const std::exception& ex) {
                std::string coords;
                for (std::size_t a = 0; a < axes.size(); ++a)
                    coords += (a ? " " : "") + axes[a].first + "=" + points[i].coords[a];
                points[i].error = coords + ": " + ex.what();
                std::replace(points[i].error.begin(), points[i].error.end(), ',', ';');
                std::replace(points[i].error.begin(), points[i].error.end(), '\n', ' ');
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    RunReport report;
    Output out(config.out_dir, report);
    std::string csv;
    for (const auto& [k, _] : axes) csv += k + ",";
    for (const auto& c : result_cols) csv += c + ",";
    csv += "error\n";
    for (const auto& pt : points) {
        for (const auto& v : pt.coords) csv += fmt(to_number("grid", v)) + ",";
        for (std::size_t i = 0; i < result_cols.size(); ++i)
            csv += (pt.error.empty() ? fmt(pt.values[i]) : std::string("nan")) + ",";
        csv += pt.error + "\n";
    }
    out.text("sweep.csv", csv);
    out.plot("sweep.plot.json", "Sweep over " + config.target, "sweep.csv", axes.back().first,
             axes.back().first, {{result_cols.front(), result_cols.front()}});
    for (const auto& pt : points)
        if (!pt.error.empty()) out.check("point", false, pt.error);

    ordered_json cfg = config_json(config, "sweep", config.target, base);
    ordered_json grid = ordered_json::object();
    for (const auto& [k, vals] : axes) grid[k] = vals;
    cfg["grid"] = grid;
    write_manifest(config.out_dir, cfg, report);
    return report;
}

}  // namespace soen
