#pragma once

// Exact expected retention signal of the candidate-event chain, used as an
// oracle for the Monte Carlo population.

#include <algorithm>
#include <cmath>
#include <vector>

#include "soen/retention.hpp"

namespace soen::oracle {

// Expected mean level at t from distribution p0, by uniformization of the
// candidate-event chain (total event rate r bounds every exit rate).
inline double mean_level_at(std::vector<double> p, const RetentionParams& prm, double t) {
    const int m = prm.states;
    std::vector<double> up(m + 1), down(m + 1);
    BehavioralSynapse s;
    s.states = m;
    s.q = prm.q;
    s.bounds = prm.bounds;
    for (int i = 0; i <= m; ++i) {
        s.level = i;
        up[i] = prm.f_plus * step_probability(s, Direction::strengthen);
        down[i] = prm.f_minus * step_probability(s, Direction::weaken);
    }
    auto mean = [&](const std::vector<double>& v) {
        double acc = 0.0;
        for (int i = 0; i <= m; ++i) acc += i * v[i];
        return acc;
    };
    const double lt = prm.rate * t;
    double weight = std::exp(-lt), acc = weight * mean(p), total = weight;
    for (int k = 1; total < 1.0 - 1e-13 && k < 100000; ++k) {
        std::vector<double> next(m + 1, 0.0);
        for (int i = 0; i <= m; ++i) {
            next[i] += p[i] * (1.0 - up[i] - down[i]);
            if (i < m) next[i + 1] += p[i] * up[i];
            if (i > 0) next[i - 1] += p[i] * down[i];
        }
        p = std::move(next);
        weight *= lt / k;
        acc += weight * mean(p);
        total += weight;
    }
    return acc;
}

inline double expected_signal(const RetentionParams& prm, double t) {
    const std::vector<double> pi = stationary_levels(prm.states, prm.q, prm.f_plus, prm.f_minus, prm.bounds);
    const int m = prm.states;
    std::vector<double> plus(m + 1, 0.0), minus(m + 1, 0.0);
    for (int i = 0; i <= m; ++i) {
        // Embedding event accepted with q away from the bound.
        const double a_up = i < m ? prm.q : 0.0;
        const double a_dn = i > 0 ? prm.q : 0.0;
        plus[i] += pi[i] * (1 - a_up);
        if (i < m) plus[i + 1] += pi[i] * a_up;
        minus[i] += pi[i] * (1 - a_dn);
        if (i > 0) minus[i - 1] += pi[i] * a_dn;
    }
    return 0.5 * (mean_level_at(plus, prm, t) - mean_level_at(minus, prm, t)) / m;
}

// Monte Carlo σ of the population signal. The coupled copies differ by at
// most one level, so Var ≥ α·|E| per synapse; this floor keeps late times,
// where the sample often holds no differing pair, from claiming zero error.
inline double signal_sigma(const RetentionParams& prm, double expected, double sample_stderr) {
    return std::max(sample_stderr, std::sqrt(std::abs(expected) / prm.states / prm.population));
}

}  // namespace soen::oracle
