#include "soen/behavioral_plasticity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "soen/circuit_model.hpp"

namespace soen {

std::uint64_t CounterRng::mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    // Two rounds of the splitmix64 finalizer over the combined key.
    auto fmix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t z = fmix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
    return fmix(z + 0x9e3779b97f4a7c15ULL * (counter + 1));
}

double CounterRng::uniform() { return static_cast<double>(mix(seed_, stream_, counter_++) >> 11) * 0x1.0p-53; }

double CounterRng::uniform_open() { return 1.0 - uniform(); }

void BehavioralSynapse::validate() const {
    if (states < 1) throw ValidationError("states", "states (1/alpha) must be at least 1");
    if (level < 0 || level > states) throw ValidationError("level", "level must lie in [0, states]");
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("q", "q must lie in [0, 1]");
    if (!q_ladder.empty() && (rung < 0 || rung >= static_cast<int>(q_ladder.size())))
        throw ValidationError("rung", "rung outside the q ladder");
}

double step_probability(const BehavioralSynapse& s, Direction dir) {
    const bool up = dir == Direction::strengthen;
    if (up ? s.level >= s.states : s.level <= 0) return 0.0;
    if (s.bounds == BoundMode::hard) return s.q;
    const double distance = up ? 1.0 - s.w() : s.w();
    return s.q * distance;
}

double expected_step(const BehavioralSynapse& s, Direction dir) { return step_probability(s, dir) * s.alpha(); }

bool apply_candidate_event(BehavioralSynapse& s, Direction dir, CounterRng& rng) {
    const double p = step_probability(s, dir);
    if (!(rng.uniform() < p)) return false;
    s.level += dir == Direction::strengthen ? 1 : -1;
    return true;
}

void PlasticityEventStream::validate() const {
    if (!(rate >= 0.0)) throw ValidationError("rate", "rate must be non-negative");
    if (!(f_plus >= 0.0 && f_plus <= 1.0)) throw ValidationError("f_plus", "f_plus must lie in [0, 1]");
    if (!(f_minus >= 0.0 && f_minus <= 1.0)) throw ValidationError("f_minus", "f_minus must lie in [0, 1]");
    if (f_plus + f_minus > 1.0 + 1e-12) throw ValidationError("f_plus", "f_plus + f_minus must not exceed 1");
}

StdpKernel::StdpKernel(std::vector<Row> rows) : rows_(std::move(rows)) {
    std::stable_sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
        return a.i_su_ua != b.i_su_ua ? a.i_su_ua < b.i_su_ua : a.delta_t_ns < b.delta_t_ns;
    });
    for (const Row& r : rows_) {
        if (r.delta_t_ns > 0 && r.delta_w < 0) throw ValidationError("delta_w", "strengthening side must be >= 0");
        if (r.delta_t_ns < 0 && r.delta_w > 0) throw ValidationError("delta_w", "weakening side must be <= 0");
    }
}

StdpKernel StdpKernel::read_csv(std::istream& in) {
    std::string line;
    std::vector<Row> rows;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("delta_t_ns", 0) == 0) continue;
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        Row r;
        char c1 = 0, c2 = 0;
        if (!(ls >> r.delta_t_ns >> c1 >> r.i_su_ua >> c2 >> r.delta_w) || c1 != ',' || c2 != ',')
            throw std::runtime_error("kernel csv line " + std::to_string(lineno) + ": malformed row");
        rows.push_back(r);
    }
    return StdpKernel(std::move(rows));
}

StdpKernel StdpKernel::read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return read_csv(f);
}

void StdpKernel::write_csv(std::ostream& out) const {
    out << "delta_t_ns,i_su_uA,delta_w\n";
    for (const Row& r : rows_)
        out << std::setprecision(9) << r.delta_t_ns << ',' << r.i_su_ua << ',' << r.delta_w << '\n';
}

const std::vector<double>& StdpKernel::standard_grid() {
    static const std::vector<double> g{0, 5, 10, 15, 20, 25, 35, 50, 75, 100};
    return g;
}

StdpKernel StdpKernel::exponential(double amplitude, double tau_ns, double i_su_ua) {
    std::vector<Row> rows;
    for (double t : standard_grid()) {
        const double v = amplitude * std::exp(-t / tau_ns);
        if (t > 0) rows.push_back({-t, i_su_ua, -v});
        rows.push_back({t, i_su_ua, v});
    }
    return StdpKernel(std::move(rows));
}

std::vector<double> StdpKernel::bias_levels() const {
    std::set<double> s;
    for (const Row& r : rows_) s.insert(r.i_su_ua);
    return {s.begin(), s.end()};
}

double StdpKernel::delta_w(double delta_t_ns, double i_su_ua) const {
    if (rows_.empty()) return 0.0;
    double best = rows_.front().i_su_ua;
    for (const Row& r : rows_)
        if (std::abs(r.i_su_ua - i_su_ua) < std::abs(best - i_su_ua)) best = r.i_su_ua;
    // Side of the table that matches the sign of Δt; Δt = 0 belongs to the strengthening side.
    std::vector<std::pair<double, double>> pts;
    for (const Row& r : rows_) {
        if (r.i_su_ua != best) continue;
        const bool strengthen_row = r.delta_t_ns > 0 || (r.delta_t_ns == 0 && r.delta_w >= 0);
        if ((delta_t_ns >= 0) == strengthen_row) pts.emplace_back(r.delta_t_ns, r.delta_w);
    }
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end());
    if (delta_t_ns < pts.front().first || delta_t_ns > pts.back().first) return 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (delta_t_ns <= pts[i].first) {
            const auto [t0, v0] = pts[i - 1];
            const auto [t1, v1] = pts[i];
            return v0 + (v1 - v0) * (delta_t_ns - t0) / (t1 - t0);
        }
    }
    return pts.back().second;
}

void stdp_update(BehavioralSynapse& s, const StdpKernel& kernel, double i_su_ua, double t_pre_ns,
                 double t_post_ns) {
    const double dw = kernel.delta_w(t_post_ns - t_pre_ns, i_su_ua);
    const int steps = static_cast<int>(std::floor(std::abs(dw) * s.states + 1e-9));
    s.level = std::clamp(s.level + (dw >= 0 ? steps : -steps), 0, s.states);
}

std::vector<double> short_term_filter(ShortTermState st, double w, const std::vector<double>& spikes,
                                      const std::vector<double>& sample_times) {
    if (!(st.tau_sf > 0 && st.tau_sd > 0)) throw ValidationError("tau", "short-term time constants must be positive");
    std::vector<double> out;
    out.reserve(sample_times.size());
    std::size_t k = 0;
    double t_last = sample_times.empty() ? 0.0 : std::min(sample_times.front(), spikes.empty() ? 0.0 : spikes.front());
    auto advance = [&](double t) {
        const double dt = t - t_last;
        st.sf *= std::exp(-dt / st.tau_sf);
        st.sd *= std::exp(-dt / st.tau_sd);
        t_last = t;
    };
    for (double t : sample_times) {
        while (k < spikes.size() && spikes[k] <= t) {
            advance(spikes[k]);
            st.sf += 1.0;
            st.sd += 1.0;
            ++k;
        }
        advance(t);
        out.push_back(std::clamp(w + st.g_sf * st.sf - st.g_sd * st.sd, 0.0, 1.0));
    }
    return out;
}

double homeostatic_update(const HomeostaticState& st, const std::vector<double>& post_spikes, double t) {
    if (!(st.tau_h > 0)) throw ValidationError("tau_h", "tau_h must be positive");
    double a = 0.0;
    for (double ti : post_spikes)
        if (ti <= t) a += std::exp(-(t - ti) / st.tau_h);
    return -st.g_h * a;
}

void metaplastic_update(BehavioralSynapse& s, Correlation event) {
    if (s.q_ladder.empty()) return;
    const int top = static_cast<int>(s.q_ladder.size()) - 1;
    s.rung = std::clamp(s.rung + (event == Correlation::up ? 1 : -1), 0, top);
    s.q = s.q_ladder[static_cast<std::size_t>(s.rung)];
}

std::vector<double> q_ladder_from_integrals(const std::vector<double>& integrals) {
    double top = 0.0;
    for (double v : integrals) top = std::max(top, v);
    std::vector<double> out;
    for (double v : integrals) out.push_back(top > 0 ? v / top : 0.0);
    return out;
}

}  // namespace soen
