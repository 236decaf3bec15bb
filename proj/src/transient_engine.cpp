#include "soen/transient_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace soen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRestartStep = 1e-14;

double wrap_phase(double x) {
    double w = std::remainder(x, kTwoPi);
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

long winding_index(double phase) { return static_cast<long>(std::floor((phase + std::numbers::pi) / kTwoPi)); }

double node_value(const Eigen::VectorXd& v, int idx) { return idx < 0 ? 0.0 : v[idx]; }

}  // namespace

int SimSystem::node_index(const std::string& name) const {
    if (name == kGround) return -1;
    auto it = std::find(node_names.begin(), node_names.end(), name);
    if (it == node_names.end()) throw std::out_of_range("unknown node " + name);
    return static_cast<int>(it - node_names.begin());
}

SimSystem assemble(const Netlist& netlist) {
    const auto diags = validate_netlist(netlist);
    if (!diags.empty()) {
        std::string msg = "cannot assemble invalid netlist:";
        for (const auto& d : diags) msg += "\n  " + d.message;
        throw AssemblyError(msg);
    }
    SimSystem sys;
    sys.tran = netlist.tran();
    for (const auto& n : netlist.nodes())
        if (n != kGround) sys.node_names.push_back(n);
    auto idx = [&](const std::string& n) { return sys.node_index(n); };

    std::map<std::string, int> inductor_of;
    for (const auto& e : netlist.elements()) {
        if (const auto* j = e.as<Junction>()) {
            sys.junctions.push_back({e.name, idx(e.node_pos), idx(e.node_neg), j->params.critical_current,
                                     j->params.shunt_resistance, j->params.capacitance});
        } else if (const auto* l = e.as<Inductor>()) {
            inductor_of[e.name] = static_cast<int>(sys.inductors.size());
            sys.inductors.push_back({e.name, idx(e.node_pos), idx(e.node_neg), l->inductance, -1, -1});
        } else if (const auto* r = e.as<Resistor>()) {
            sys.resistors.push_back({e.name, idx(e.node_pos), idx(e.node_neg), r->resistance});
        } else if (const auto* s = e.as<Spd>()) {
            sys.spds.push_back({e.name, idx(e.node_pos), idx(e.node_neg), s->params});
        } else if (const auto* src = e.as<CurrentSource>()) {
            sys.sources.push_back({e.name, idx(e.node_pos), idx(e.node_neg), src->waveform});
        }
    }

    // Group inductors joined by mutual couplings.
    const int n_ind = static_cast<int>(sys.inductors.size());
    std::vector<int> parent(static_cast<std::size_t>(n_ind));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
    struct Coupling {
        int a, b;
        double m;
        std::string name;
    };
    std::vector<Coupling> couplings;
    for (const auto& e : netlist.elements()) {
        if (const auto* m = e.as<Mutual>()) {
            const int a = inductor_of.at(m->inductor_a);
            const int b = inductor_of.at(m->inductor_b);
            couplings.push_back({a, b, m->mutual, e.name});
            parent[root(a)] = root(b);
        }
    }
    std::map<int, int> block_of_root;
    for (int i = 0; i < n_ind; ++i) {
        const int r = root(i);
        auto [it, inserted] = block_of_root.emplace(r, static_cast<int>(sys.blocks.size()));
        if (inserted) sys.blocks.emplace_back();
        auto& blk = sys.blocks[static_cast<std::size_t>(it->second)];
        sys.inductors[static_cast<std::size_t>(i)].block = it->second;
        sys.inductors[static_cast<std::size_t>(i)].slot = static_cast<int>(blk.members.size());
        blk.members.push_back(i);
    }
    for (auto& blk : sys.blocks) {
        const auto k = static_cast<Eigen::Index>(blk.members.size());
        blk.inductance = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index s = 0; s < k; ++s) blk.inductance(s, s) = sys.inductors[static_cast<std::size_t>(blk.members[static_cast<std::size_t>(s)])].l;
    }
    for (const auto& c : couplings) {
        const auto& ia = sys.inductors[static_cast<std::size_t>(c.a)];
        const auto& ib = sys.inductors[static_cast<std::size_t>(c.b)];
        auto& blk = sys.blocks[static_cast<std::size_t>(ia.block)];
        blk.inductance(ia.slot, ib.slot) += c.m;
        blk.inductance(ib.slot, ia.slot) += c.m;
    }
    for (std::size_t b = 0; b < sys.blocks.size(); ++b) {
        auto& blk = sys.blocks[b];
        if (blk.members.size() == 1) {
            blk.inverse = blk.inductance.inverse();
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(blk.inductance);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 1e-9 * hi)) {
            std::string names;
            for (int m : blk.members) names += (names.empty() ? "" : ",") + sys.inductors[static_cast<std::size_t>(m)].name;
            throw AssemblyError("singular inductance block {" + names + "}");
        }
        blk.inverse = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    }
    return sys;
}

SimOptions SimOptions::from(const TransientSpec& spec) {
    SimOptions o;
    o.t_stop = spec.t_stop;
    o.dt_max = spec.dt_max;
    o.output_decimation = spec.output_decimation;
    o.ramp_time = spec.ramp_time;
    o.settle_time = spec.settle_time;
    return o;
}

std::string phase_column(const std::string& name) { return "P(" + name + ")"; }
std::string voltage_column(const std::string& node) { return "V(" + node + ")"; }
std::string current_column(const std::string& name) { return "I(" + name + ")"; }

bool Trace::has(const std::string& column) const {
    return std::find(names.begin(), names.end(), column) != names.end();
}

const std::vector<double>& Trace::series(const std::string& column) const {
    auto it = std::find(names.begin(), names.end(), column);
    if (it == names.end()) throw std::out_of_range("trace has no column " + column);
    return columns[static_cast<std::size_t>(it - names.begin())];
}

double Trace::value_at(const std::string& column, double t) const {
    const auto& s = series(column);
    if (times.empty()) throw std::out_of_range("empty trace");
    if (t <= times.front()) return s.front();
    if (t >= times.back()) return s.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto i = static_cast<std::size_t>(it - times.begin());
    const double f = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return s[i - 1] + f * (s[i] - s[i - 1]);
}

double Trace::mean(const std::string& column, double t0, double t1) const {
    const auto& s = series(column);
    double acc = 0.0;
    double span = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double a = std::max(times[i - 1], t0);
        const double b = std::min(times[i], t1);
        if (b <= a) continue;
        acc += 0.5 * (value_at(column, a) + value_at(column, b)) * (b - a);
        span += b - a;
    }
    (void)s;
    if (span <= 0.0) return value_at(column, t0);
    return acc / span;
}

double Trace::max_abs(const std::string& column, double t0, double t1) const {
    const auto& s = series(column);
    double m = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= t0 && times[i] <= t1) m = std::max(m, std::abs(s[i]));
    return m;
}

double inductor_current(const SimSystem& system, const SimState& state, int inductor) {
    const auto& ind = system.inductors[static_cast<std::size_t>(inductor)];
    const auto& blk = system.blocks[static_cast<std::size_t>(ind.block)];
    double i = 0.0;
    for (std::size_t s = 0; s < blk.members.size(); ++s) {
        const auto& other = system.inductors[static_cast<std::size_t>(blk.members[s])];
        const double theta = node_value(state.phase, other.a) - node_value(state.phase, other.b);
        i += blk.inverse(ind.slot, static_cast<Eigen::Index>(s)) * theta;
    }
    return kPhaseToFlux * i;
}

double junction_phase(const SimSystem& system, const SimState& state, int junction) {
    const auto& j = system.junctions[static_cast<std::size_t>(junction)];
    return node_value(state.phase, j.a) - node_value(state.phase, j.b);
}

namespace {

/// Per-run integrator. Holds the constant part of the Jacobian and scratch.
class Integrator {
public:
    Integrator(const SimSystem& sys, const SimOptions& opt) : sys_(sys), opt_(opt) {
        n_ = static_cast<Eigen::Index>(sys.node_count());
        m_ = static_cast<Eigen::Index>(sys.unknown_count());
        inductor_stamp_ = Eigen::MatrixXd::Zero(n_, n_);
        for (const auto& blk : sys.blocks) {
            for (std::size_t p = 0; p < blk.members.size(); ++p) {
                const auto& ip = sys.inductors[static_cast<std::size_t>(blk.members[p])];
                for (std::size_t q = 0; q < blk.members.size(); ++q) {
                    const auto& iq = sys.inductors[static_cast<std::size_t>(blk.members[q])];
                    const double g = kPhaseToFlux * blk.inverse(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
                    // current_p = g * (φ[iq.a] - φ[iq.b]); leaves ip.a, enters ip.b
                    stamp(inductor_stamp_, ip.a, iq.a, g);
                    stamp(inductor_stamp_, ip.a, iq.b, -g);
                    stamp(inductor_stamp_, ip.b, iq.a, -g);
                    stamp(inductor_stamp_, ip.b, iq.b, g);
                }
            }
        }
        jac_.resize(m_, m_);
        res_.resize(m_);
        x_.resize(m_);
    }

    /// Solves one step from `prev` to time prev.time + h. Returns iteration
    /// count, or -1 on non-convergence.
    int solve(const SimState& prev, double h, bool backward_euler, const Eigen::VectorXd& guess_phase,
              const Eigen::VectorXd& guess_spd, SimState& next) {
        const double t1 = prev.time + h;
        const double g = (backward_euler ? 1.0 : 2.0) * kPhaseToFlux / h;  // dv/dφ
        const double gd = (backward_euler ? 1.0 : 2.0) / h;                // d(dvdt)/dv
        const Eigen::Index ns = static_cast<Eigen::Index>(sys_.spds.size());

        Eigen::VectorXd source(n_);
        source.setZero();
        for (const auto& s : sys_.sources) {
            const double val = source_value(s, t1);
            if (s.into >= 0) source[s.into] += val;
            if (s.from >= 0) source[s.from] -= val;
        }
        std::vector<double> r_now(sys_.spds.size());
        std::vector<double> r_prev(sys_.spds.size());
        for (std::size_t k = 0; k < sys_.spds.size(); ++k) {
            r_now[k] = sys_.spds[k].params.resistance_at(t1);
            r_prev[k] = sys_.spds[k].params.resistance_at(prev.time);
        }

        x_.head(n_) = guess_phase;
        if (ns) x_.tail(ns) = guess_spd;
        Eigen::VectorXd v(n_);
        Eigen::VectorXd a(n_);
        for (int iter = 1; iter <= opt_.max_newton_iterations; ++iter) {
            const auto phase = x_.head(n_);
            if (backward_euler) {
                v = (kPhaseToFlux / h) * (phase - prev.phase);
                a = (v - prev.voltage) / h;
            } else {
                v = g * (phase - prev.phase) - prev.voltage;
                a = gd * (v - prev.voltage) - prev.dvdt;
            }
            jac_.setZero();
            jac_.topLeftCorner(n_, n_) = inductor_stamp_;
            res_.setZero();
            res_.head(n_) = inductor_stamp_ * phase - source;

            for (const auto& j : sys_.junctions) {
                const double theta = node_value(phase, j.a) - node_value(phase, j.b);
                const double u = node_value(v, j.a) - node_value(v, j.b);
                const double du = node_value(a, j.a) - node_value(a, j.b);
                const double i = j.ic * std::sin(theta) + u / j.r + j.c * du;
                const double di = j.ic * std::cos(theta) + g / j.r + j.c * gd * g;
                add_branch(j.a, j.b, i, di);
            }
            for (const auto& r : sys_.resistors) {
                const double u = node_value(v, r.a) - node_value(v, r.b);
                add_branch(r.a, r.b, u / r.r, g / r.r);
            }
            for (Eigen::Index k = 0; k < ns; ++k) {
                const auto& s = sys_.spds[static_cast<std::size_t>(k)];
                const Eigen::Index row = n_ + k;
                const double cur = x_[row];
                if (s.a >= 0) {
                    res_[s.a] += cur;
                    jac_(s.a, row) += 1.0;
                }
                if (s.b >= 0) {
                    res_[s.b] -= cur;
                    jac_(s.b, row) -= 1.0;
                }
                const double dtheta = (node_value(phase, s.a) - node_value(phase, s.b)) -
                                      (node_value(prev.phase, s.a) - node_value(prev.phase, s.b));
                double drive;
                double dcoef;
                if (backward_euler) {
                    drive = h / kPhaseToFlux * r_now[static_cast<std::size_t>(k)] * cur;
                    dcoef = h / kPhaseToFlux * r_now[static_cast<std::size_t>(k)];
                } else {
                    drive = 0.5 * h / kPhaseToFlux *
                            (r_now[static_cast<std::size_t>(k)] * cur + r_prev[static_cast<std::size_t>(k)] * prev.spd_current[k]);
                    dcoef = 0.5 * h / kPhaseToFlux * r_now[static_cast<std::size_t>(k)];
                }
                res_[row] = dtheta - drive;
                if (s.a >= 0) jac_(row, s.a) += 1.0;
                if (s.b >= 0) jac_(row, s.b) -= 1.0;
                jac_(row, row) -= dcoef;
            }

            lu_.compute(jac_);
            const Eigen::VectorXd dx = lu_.solve(res_);
            if (!dx.allFinite()) return -1;
            x_ -= dx;
            const double dphase = n_ ? dx.head(n_).cwiseAbs().maxCoeff() : 0.0;
            double dcur = 0.0;
            double cur_scale = 1e-12;
            if (ns) {
                dcur = dx.tail(ns).cwiseAbs().maxCoeff();
                cur_scale = std::max(cur_scale, x_.tail(ns).cwiseAbs().maxCoeff());
            }
            const double phase_scale = n_ ? 1.0 + x_.head(n_).cwiseAbs().maxCoeff() : 1.0;
            if (dphase < 1e-11 * phase_scale + 1e-10 && dcur < 1e-9 * cur_scale + 1e-15) {
                next.time = t1;
                next.phase = x_.head(n_);
                if (backward_euler) {
                    next.voltage = (kPhaseToFlux / h) * (next.phase - prev.phase);
                    next.dvdt = (next.voltage - prev.voltage) / h;
                } else {
                    next.voltage = g * (next.phase - prev.phase) - prev.voltage;
                    next.dvdt = gd * (next.voltage - prev.voltage) - prev.dvdt;
                }
                next.spd_current = ns ? Eigen::VectorXd(x_.tail(ns)) : Eigen::VectorXd(0);
                return iter;
            }
        }
        return -1;
    }

    double source_value(const SourceBranch& s, double t) const {
        if (t >= 0.0) return s.waveform.value(t);
        const double full = s.waveform.initial_value();
        const double ramp_end = -opt_.settle_time;
        const double ramp_start = ramp_end - opt_.ramp_time;
        if (t >= ramp_end) return full;
        if (t <= ramp_start) return 0.0;
        const double x = (t - ramp_start) / opt_.ramp_time;
        return full * x * x * (3.0 - 2.0 * x);
    }

private:
    static void stamp(Eigen::MatrixXd& m, int r, int c, double v) {
        if (r >= 0 && c >= 0) m(r, c) += v;
    }

    void add_branch(int a, int b, double i, double di) {
        if (a >= 0) {
            res_[a] += i;
            jac_(a, a) += di;
            if (b >= 0) jac_(a, b) -= di;
        }
        if (b >= 0) {
            res_[b] -= i;
            jac_(b, b) += di;
            if (a >= 0) jac_(b, a) -= di;
        }
    }

    const SimSystem& sys_;
    const SimOptions& opt_;
    Eigen::Index n_ = 0;
    Eigen::Index m_ = 0;
    Eigen::MatrixXd inductor_stamp_;
    Eigen::MatrixXd jac_;
    Eigen::VectorXd res_;
    Eigen::VectorXd x_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

struct Recorder {
    const SimSystem& sys;
    Trace& trace;
    std::vector<std::function<double(const SimState&, const Eigen::VectorXd&)>> getters;

    Recorder(const SimSystem& s, Trace& t, const std::vector<std::string>& probes) : sys(s), trace(t) {
        auto want = [&](const std::string& col) {
            return probes.empty() || std::find(probes.begin(), probes.end(), col) != probes.end();
        };
        auto add = [&](std::string col, std::function<double(const SimState&, const Eigen::VectorXd&)> f) {
            if (!want(col)) return;
            trace.names.push_back(std::move(col));
            getters.push_back(std::move(f));
        };
        for (std::size_t i = 0; i < sys.node_names.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            add(phase_column(sys.node_names[i]), [k](const SimState& st, const Eigen::VectorXd&) { return st.phase[k]; });
            add(voltage_column(sys.node_names[i]), [k](const SimState&, const Eigen::VectorXd& vbd) { return vbd[k]; });
        }
        for (std::size_t i = 0; i < sys.junctions.size(); ++i) {
            const auto& j = sys.junctions[i];
            const int ji = static_cast<int>(i);
            add(phase_column(j.name), [this, ji](const SimState& st, const Eigen::VectorXd&) { return junction_phase(sys, st, ji); });
            add(current_column(j.name), [this, ji](const SimState& st, const Eigen::VectorXd&) {
                const auto& jj = sys.junctions[static_cast<std::size_t>(ji)];
                const double theta = junction_phase(sys, st, ji);
                const double u = node_value(st.voltage, jj.a) - node_value(st.voltage, jj.b);
                const double du = node_value(st.dvdt, jj.a) - node_value(st.dvdt, jj.b);
                return jj.ic * std::sin(theta) + u / jj.r + jj.c * du;
            });
        }
        for (std::size_t i = 0; i < sys.inductors.size(); ++i) {
            const int ii = static_cast<int>(i);
            add(current_column(sys.inductors[i].name),
                [this, ii](const SimState& st, const Eigen::VectorXd&) { return inductor_current(sys, st, ii); });
        }
        for (std::size_t i = 0; i < sys.resistors.size(); ++i) {
            const auto& r = sys.resistors[i];
            const int a = r.a, b = r.b;
            const double res = r.r;
            add(current_column(r.name), [a, b, res](const SimState&, const Eigen::VectorXd& vbd) {
                return (node_value(vbd, a) - node_value(vbd, b)) / res;
            });
        }
        for (std::size_t i = 0; i < sys.spds.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            add(current_column(sys.spds[i].name), [k](const SimState& st, const Eigen::VectorXd&) { return st.spd_current[k]; });
        }
        for (std::size_t i = 0; i < sys.sources.size(); ++i) {
            const auto* w = &sys.sources[i].waveform;
            add(current_column(sys.sources[i].name), [w](const SimState& st, const Eigen::VectorXd&) { return w->value(st.time); });
        }
        trace.columns.resize(trace.names.size());
    }

    void record(const SimState& st, const Eigen::VectorXd& vbd) {
        trace.times.push_back(st.time);
        for (std::size_t c = 0; c < getters.size(); ++c) trace.columns[c].push_back(getters[c](st, vbd));
    }
};

}  // namespace

Trace run_transient(const SimSystem& sys, const SimOptions& opt) {
    if (!(opt.dt_max > 0.0)) throw std::invalid_argument("dt_max must be > 0");
    if (!(opt.t_stop > 0.0)) throw std::invalid_argument("t_stop must be > 0");

    Trace trace;
    for (const auto& j : sys.junctions) trace.junction_names.push_back(j.name);
    Recorder rec(sys, trace, opt.probes);
    Integrator integ(sys, opt);

    const auto n = static_cast<Eigen::Index>(sys.node_count());
    const auto ns = static_cast<Eigen::Index>(sys.spds.size());
    const double t_start = -(opt.ramp_time + opt.settle_time);

    SimState cur;
    cur.time = t_start;
    cur.phase = Eigen::VectorXd::Zero(n);
    cur.voltage = Eigen::VectorXd::Zero(n);
    cur.dvdt = Eigen::VectorXd::Zero(n);
    cur.spd_current = Eigen::VectorXd::Zero(ns);
    for (const auto& [node, ph] : opt.initial_phases) {
        const int k = sys.node_index(node);
        if (k >= 0) cur.phase[k] = ph;
    }

    std::vector<double> bps{-opt.settle_time, 0.0, opt.t_stop};
    for (const auto& s : sys.sources)
        for (double b : s.waveform.breakpoints()) bps.push_back(b);
    for (const auto& s : sys.spds)
        for (double b : s.params.breakpoints()) bps.push_back(b);
    for (double b : opt.breakpoints) bps.push_back(b);
    std::sort(bps.begin(), bps.end());
    std::vector<double> breakpoints;
    for (double b : bps) {
        if (b <= t_start || b > opt.t_stop) continue;
        if (!breakpoints.empty() && b - breakpoints.back() < 1e-18) continue;
        breakpoints.push_back(b);
    }
    std::size_t next_bp = 0;

    std::vector<long> winding(sys.junctions.size());
    for (std::size_t j = 0; j < sys.junctions.size(); ++j) winding[j] = winding_index(junction_phase(sys, cur, static_cast<int>(j)));

    Eigen::VectorXd prev_phase = cur.phase;  // state before `cur`, for the predictor
    Eigen::VectorXd prev_spd = cur.spd_current;
    double prev_h = 0.0;
    bool restart = true;
    double h = std::min(kRestartStep, opt.dt_max);
    long kept_since_record = 0;
    double last_record = -1.0;
    bool recorded_any = false;
    const Eigen::VectorXd zero_v = Eigen::VectorXd::Zero(n);

    auto maybe_record = [&](const SimState& st, const Eigen::VectorXd& vbd, bool force) {
        if (st.time < -1e-21) return;
        ++kept_since_record;
        const bool due = kept_since_record >= opt.output_decimation &&
                         (!recorded_any || st.time - last_record >= opt.sample_interval);
        if (due || force || !recorded_any) {
            rec.record(st, vbd);
            last_record = st.time;
            recorded_any = true;
            kept_since_record = 0;
        }
    };
    if (t_start >= 0.0) maybe_record(cur, zero_v, true);

    SimState next;
    while (cur.time < opt.t_stop - 1e-21) {
        h = std::min(h, opt.dt_max);
        bool hits_bp = false;
        while (next_bp < breakpoints.size() && breakpoints[next_bp] <= cur.time + 1e-21) ++next_bp;
        if (next_bp < breakpoints.size() && cur.time + h >= breakpoints[next_bp] - 1e-21) {
            h = breakpoints[next_bp] - cur.time;
            hits_bp = true;
        }

        // Predictor: linear extrapolation from the last two accepted points.
        Eigen::VectorXd guess = cur.phase;
        Eigen::VectorXd guess_spd = cur.spd_current;
        const bool have_history = !restart && prev_h > 0.0;
        if (have_history) {
            guess = cur.phase + (cur.phase - prev_phase) * (h / prev_h);
            if (ns) guess_spd = cur.spd_current + (cur.spd_current - prev_spd) * (h / prev_h);
        }

        const int iters = integ.solve(cur, h, restart, guess, guess_spd, next);
        if (iters < 0) {
            ++trace.rejected_steps;
            h *= 0.25;
            if (h < opt.dt_min) {
                std::ostringstream os;
                os << "Newton iteration failed to converge at t = " << cur.time << " s (dt below dt_min)";
                throw SimulationError(os.str(), cur.time);
            }
            continue;
        }
        if (!next.phase.allFinite() || !next.voltage.allFinite()) {
            std::ostringstream os;
            os << "non-finite state at t = " << next.time << " s";
            throw SimulationError(os.str(), next.time);
        }

        double ratio = 0.0;
        double max_advance = 0.0;
        for (std::size_t j = 0; j < sys.junctions.size(); ++j) {
            const double adv = std::abs(junction_phase(sys, next, static_cast<int>(j)) - junction_phase(sys, cur, static_cast<int>(j)));
            max_advance = std::max(max_advance, adv);
        }
        ratio = max_advance / opt.max_phase_step;
        if (have_history) {
            SimState pred;
            pred.phase = guess;
            for (std::size_t j = 0; j < sys.junctions.size(); ++j) {
                const double err = std::abs(junction_phase(sys, next, static_cast<int>(j)) - junction_phase(sys, pred, static_cast<int>(j)));
                ratio = std::max(ratio, err / opt.phase_tolerance);
            }
            for (std::size_t i = 0; i < sys.inductors.size(); ++i) {
                const double in = inductor_current(sys, next, static_cast<int>(i));
                const double ip = inductor_current(sys, pred, static_cast<int>(i));
                const double ic = inductor_current(sys, cur, static_cast<int>(i));
                const double tol = opt.current_reltol * std::max(std::abs(in), std::abs(ic)) + opt.current_abstol;
                ratio = std::max(ratio, std::abs(in - ip) / tol);
            }
            for (Eigen::Index k = 0; k < ns; ++k) {
                const double tol = opt.current_reltol * std::max(std::abs(next.spd_current[k]), std::abs(cur.spd_current[k])) + opt.current_abstol;
                ratio = std::max(ratio, std::abs(next.spd_current[k] - guess_spd[k]) / tol);
            }
        }
        if (ratio > 1.0 && h > opt.dt_min * 2.0) {
            ++trace.rejected_steps;
            h *= std::max(0.2, 0.8 / std::sqrt(ratio));
            continue;
        }

        // Accept.
        for (std::size_t j = 0; j < sys.junctions.size(); ++j) {
            const double th_new = junction_phase(sys, next, static_cast<int>(j));
            const long w = winding_index(th_new);
            if (w != winding[j]) {
                const double th_old = junction_phase(sys, cur, static_cast<int>(j));
                const int dir = w > winding[j] ? 1 : -1;
                for (long k = winding[j]; k != w; k += dir) {
                    const double boundary = (dir > 0 ? (k + 0.5) : (k - 0.5)) * kTwoPi;
                    const double f = th_new != th_old ? (boundary - th_old) / (th_new - th_old) : 1.0;
                    const double te = cur.time + std::clamp(f, 0.0, 1.0) * h;
                    if (te >= 0.0) trace.fluxon_events.push_back({sys.junctions[j].name, te, dir});
                }
                winding[j] = w;
            }
        }
        prev_phase = cur.phase;
        prev_spd = cur.spd_current;
        prev_h = h;
        const Eigen::VectorXd vbd = (kPhaseToFlux / h) * (next.phase - cur.phase);
        std::swap(cur, next);
        ++trace.accepted_steps;
        const bool at_end = cur.time >= opt.t_stop - 1e-21;
        maybe_record(cur, vbd, at_end || (hits_bp && std::abs(cur.time) < 1e-21));

        if (hits_bp) {
            restart = true;
            h = std::min(h, kRestartStep);
        } else {
            restart = false;
            if (ratio < 0.25 && iters <= 4) h *= 2.0;
            else if (ratio < 0.6) h *= 1.25;
        }
    }
    // Windings at t >= 0 only count from the experiment clock.
    std::stable_sort(trace.fluxon_events.begin(), trace.fluxon_events.end(),
                     [](const FluxonEvent& a, const FluxonEvent& b) { return a.time < b.time; });
    trace.final_state = cur;
    return trace;
}

Trace run_transient(const SimSystem& system, double t_stop, double dt_max) {
    SimOptions o = SimOptions::from(system.tran);
    o.t_stop = t_stop;
    o.dt_max = dt_max;
    return run_transient(system, o);
}

int count_fluxons(const Trace& trace, const std::string& junction) {
    if (std::find(trace.junction_names.begin(), trace.junction_names.end(), junction) == trace.junction_names.end())
        throw std::out_of_range("trace has no junction " + junction);
    int n = 0;
    for (const auto& e : trace.fluxon_events)
        if (e.element == junction) n += e.polarity;
    return n;
}

const std::vector<double>& loop_current(const Trace& trace, const std::string& inductor) {
    return trace.series(current_column(inductor));
}

bool is_quiescent(const Trace& trace, double t0, double t1, double threshold) {
    for (std::size_t c = 0; c < trace.names.size(); ++c) {
        if (trace.names[c].rfind("V(", 0) != 0) continue;
        if (trace.max_abs(trace.names[c], t0, t1) >= threshold) return false;
    }
    return true;
}

std::vector<LoopFlux> loop_fluxes(const SimSystem& sys, const SimState& state) {
    // Edge list of the superconducting subgraph; node -1 (ground) maps to 0.
    struct Edge {
        int a, b;
        int kind;  // 0 inductor, 1 junction, 2 spd
        int index;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < sys.inductors.size(); ++i)
        edges.push_back({sys.inductors[i].a + 1, sys.inductors[i].b + 1, 0, static_cast<int>(i)});
    for (std::size_t i = 0; i < sys.junctions.size(); ++i)
        edges.push_back({sys.junctions[i].a + 1, sys.junctions[i].b + 1, 1, static_cast<int>(i)});
    for (std::size_t i = 0; i < sys.spds.size(); ++i)
        edges.push_back({sys.spds[i].a + 1, sys.spds[i].b + 1, 2, static_cast<int>(i)});

    const std::size_t nn = sys.node_count() + 1;
    std::vector<std::vector<std::pair<int, int>>> adj(nn);  // (neighbor, edge)
    for (std::size_t e = 0; e < edges.size(); ++e) {
        adj[static_cast<std::size_t>(edges[e].a)].push_back({edges[e].b, static_cast<int>(e)});
        adj[static_cast<std::size_t>(edges[e].b)].push_back({edges[e].a, static_cast<int>(e)});
    }
    std::vector<int> parent_edge(nn, -1), depth(nn, -1), parent_node(nn, -1);
    std::vector<bool> tree(edges.size(), false);
    for (std::size_t s = 0; s < nn; ++s) {
        if (depth[s] >= 0) continue;
        depth[s] = 0;
        std::vector<int> stack{static_cast<int>(s)};
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (auto [v, e] : adj[static_cast<std::size_t>(u)]) {
                if (depth[static_cast<std::size_t>(v)] >= 0) continue;
                depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
                parent_edge[static_cast<std::size_t>(v)] = e;
                parent_node[static_cast<std::size_t>(v)] = u;
                tree[static_cast<std::size_t>(e)] = true;
                stack.push_back(v);
            }
        }
    }

    auto edge_flux = [&](const Edge& e) {
        if (e.kind == 0) {
            const auto& ind = sys.inductors[static_cast<std::size_t>(e.index)];
            const auto& blk = sys.blocks[static_cast<std::size_t>(ind.block)];
            double flux = 0.0;
            for (std::size_t s = 0; s < blk.members.size(); ++s)
                flux += blk.inductance(ind.slot, static_cast<Eigen::Index>(s)) * inductor_current(sys, state, blk.members[s]);
            return flux;
        }
        const int a = e.a - 1, b = e.b - 1;
        const double theta = node_value(state.phase, a) - node_value(state.phase, b);
        return kPhaseToFlux * (e.kind == 1 ? wrap_phase(theta) : theta);
    };
    auto edge_name = [&](const Edge& e) {
        if (e.kind == 0) return sys.inductors[static_cast<std::size_t>(e.index)].name;
        if (e.kind == 1) return sys.junctions[static_cast<std::size_t>(e.index)].name;
        return sys.spds[static_cast<std::size_t>(e.index)].name;
    };

    std::vector<LoopFlux> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (tree[e]) continue;
        // Cycle: edge a->b, then tree path b -> a.
        LoopFlux lf;
        double flux = edge_flux(edges[e]);
        lf.elements.push_back(edge_name(edges[e]));
        int u = edges[e].b, v = edges[e].a;
        std::vector<std::pair<int, double>> tail;  // from v side, reversed later
        while (u != v) {
            if (depth[static_cast<std::size_t>(u)] >= depth[static_cast<std::size_t>(v)]) {
                const auto& pe = edges[static_cast<std::size_t>(parent_edge[static_cast<std::size_t>(u)])];
                // Traverse u -> parent(u).
                const double sign = pe.a == u ? 1.0 : -1.0;
                flux += sign * edge_flux(pe);
                lf.elements.push_back(edge_name(pe));
                u = parent_node[static_cast<std::size_t>(u)];
            } else {
                const auto& pe = edges[static_cast<std::size_t>(parent_edge[static_cast<std::size_t>(v)])];
                // Path goes parent(v) -> v.
                const double sign = pe.b == v ? 1.0 : -1.0;
                flux += sign * edge_flux(pe);
                tail.push_back({parent_edge[static_cast<std::size_t>(v)], sign});
                v = parent_node[static_cast<std::size_t>(v)];
            }
        }
        for (auto it = tail.rbegin(); it != tail.rend(); ++it) lf.elements.push_back(edge_name(edges[static_cast<std::size_t>(it->first)]));
        lf.flux_quanta = flux / kFluxQuantum;
        out.push_back(std::move(lf));
    }
    return out;
}

double stored_energy(const SimSystem& sys, const SimState& state) {
    double e = 0.0;
    for (const auto& blk : sys.blocks) {
        Eigen::VectorXd i(static_cast<Eigen::Index>(blk.members.size()));
        for (std::size_t s = 0; s < blk.members.size(); ++s) i[static_cast<Eigen::Index>(s)] = inductor_current(sys, state, blk.members[s]);
        e += 0.5 * i.dot(blk.inductance * i);
    }
    for (std::size_t k = 0; k < sys.junctions.size(); ++k) {
        const auto& j = sys.junctions[k];
        const double theta = junction_phase(sys, state, static_cast<int>(k));
        const double u = node_value(state.voltage, j.a) - node_value(state.voltage, j.b);
        e += kPhaseToFlux * j.ic * (1.0 - std::cos(theta)) + 0.5 * j.c * u * u;
    }
    return e;
}

}  // namespace soen
