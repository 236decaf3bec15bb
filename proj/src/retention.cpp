#include "soen/retention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "soen/circuit_model.hpp"
#include "soen/simd/population_kernels.hpp"

namespace soen {

void RetentionParams::validate() const {
    if (population < 1) throw ValidationError("population", "population must be positive");
    if (states < 1 || states > 16384) throw ValidationError("states", "states must lie in [1, 16384]");
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("q", "q must lie in [0, 1]");
    PlasticityEventStream{rate, f_plus, f_minus, seed}.validate();
    if (t_grid.empty() || t_grid.front() != 0.0) throw ValidationError("t_grid", "t_grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw ValidationError("t_grid", "t_grid must be strictly increasing");
}

std::vector<double> retention_grid(double t_min, double t_max, int count) {
    std::vector<double> g{0.0};
    for (int i = 0; i < count; ++i)
        g.push_back(t_min * std::pow(t_max / t_min, count > 1 ? static_cast<double>(i) / (count - 1) : 0.0));
    return g;
}

std::vector<double> stationary_levels(int states, double q, double f_plus, double f_minus, BoundMode bounds) {
    // Birth-death chain: π(i+1)/π(i) = up(i)/down(i+1).
    BehavioralSynapse s;
    s.states = states;
    s.q = q;
    s.bounds = bounds;
    std::vector<double> p(static_cast<std::size_t>(states) + 1, 0.0);
    p[0] = 1.0;
    double total = 1.0;
    for (int i = 0; i < states; ++i) {
        s.level = i;
        const double up = f_plus * step_probability(s, Direction::strengthen);
        s.level = i + 1;
        const double down = f_minus * step_probability(s, Direction::weaken);
        if (up == 0.0 || down == 0.0) {
            // Absorbing or disconnected: fall back to a uniform start.
            std::fill(p.begin(), p.end(), 1.0 / (states + 1));
            return p;
        }
        p[static_cast<std::size_t>(i) + 1] = p[static_cast<std::size_t>(i)] * up / down;
        total += p[static_cast<std::size_t>(i) + 1];
    }
    for (double& v : p) v /= total;
    return p;
}

RetentionResult retention_experiment(const RetentionParams& prm) {
    prm.validate();
    const std::size_t n = static_cast<std::size_t>(prm.population);
    const std::size_t nt = prm.t_grid.size();
    std::vector<std::int32_t> sign(n);
    std::vector<std::int32_t> emb(nt * n), ctrl(nt * n);
    const std::vector<double> pi = stationary_levels(prm.states, prm.q, prm.f_plus, prm.f_minus, prm.bounds);

    auto simulate = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(prm.seed, i);
            sign[i] = rng.uniform() < 0.5 ? 1 : -1;
            double u = rng.uniform();
            int level = 0;
            while (level < prm.states && u >= pi[static_cast<std::size_t>(level)]) u -= pi[static_cast<std::size_t>(level++)];
            BehavioralSynapse a;
            a.states = prm.states;
            a.q = prm.q;
            a.bounds = prm.bounds;
            a.level = level;
            BehavioralSynapse b = a;
            apply_candidate_event(a, sign[i] > 0 ? Direction::strengthen : Direction::weaken, rng);
            double t_event = prm.rate > 0 ? -std::log(rng.uniform_open()) / prm.rate : INFINITY;
            for (std::size_t k = 0; k < nt; ++k) {
                while (t_event <= prm.t_grid[k]) {
                    const double d = rng.uniform();
                    const double v = rng.uniform();
                    if (d < prm.f_plus + prm.f_minus) {
                        const Direction dir = d < prm.f_plus ? Direction::strengthen : Direction::weaken;
                        // Shared draw couples the embedded and control copies.
                        if (v < step_probability(a, dir)) a.level += dir == Direction::strengthen ? 1 : -1;
                        if (v < step_probability(b, dir)) b.level += dir == Direction::strengthen ? 1 : -1;
                    }
                    t_event += -std::log(rng.uniform_open()) / prm.rate;
                }
                emb[k * n + i] = a.level;
                ctrl[k * n + i] = b.level;
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, prm.jobs)), 1, n);
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(simulate, n * j / jobs, n * (j + 1) / jobs);
    simulate(0, n / jobs);
    for (auto& t : pool) t.join();

    RetentionResult r;
    r.t = prm.t_grid;
    r.degenerate = prm.rate == 0.0;
    const double scale = 1.0 / prm.states;
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k < nt; ++k) {
        const auto s = simd::population_sums(&emb[k * n], &ctrl[k * n], sign.data(), n);
        const double mean = s.sum / nn;
        const double var = std::max(0.0, s.sum_sq / nn - mean * mean) * scale * scale;
        const double sig = s.signed_diff / nn * scale;
        const double dvar = std::max(0.0, s.diff_sq / nn * scale * scale - sig * sig);
        const double noise = std::sqrt(var / nn);
        r.signal.push_back(sig);
        r.signal_stderr.push_back(std::sqrt(dvar / nn));
        r.noise.push_back(noise);
        r.snr.push_back(noise > 0 ? sig / noise : 0.0);
    }
    for (std::size_t k = 1; k < nt; ++k) {
        if (r.snr[k] < 1.0) {
            const double y0 = r.snr[k - 1], y1 = r.snr[k];
            const double f = y0 > y1 ? (y0 - 1.0) / (y0 - y1) : 0.0;
            r.lifetime = r.t[k - 1] + std::clamp(f, 0.0, 1.0) * (r.t[k] - r.t[k - 1]);
            break;
        }
    }
    return r;
}

void write_retention_csv(std::ostream& out, const RetentionResult& result) {
    out << "t,snr\n";
    char buf[64];
    for (std::size_t k = 0; k < result.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", result.t[k], result.snr[k]);
        out << buf;
    }
}

}  // namespace soen
