#pragma once

// Memory retention in a population of behavioral synapses under ongoing
// candidate plasticity events.
//
// At t = 0 every synapse starts from the stationary level distribution and
// one memory (a random ±1 pattern ξ) is embedded by one candidate event per
// synapse in the direction ξᵢ. Each synapse is paired with a control copy
// that skips the embedding but sees the same later event stream, so the
// signal (1/N)Σ ξᵢ(wᵢ − w̃ᵢ) is unbiased with low variance. The noise is the
// population spread sd(w)/√N.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "soen/behavioral_plasticity.hpp"

namespace soen {

struct RetentionParams {
    int population = 10000;
    int states = 8;  // 1/α
    double q = 0.5;
    double f_plus = 0.52;
    double f_minus = 0.48;
    double rate = 1.0;  // candidate events per unit time per synapse
    BoundMode bounds = BoundMode::hard;
    std::vector<double> t_grid;  // increasing, starting at 0
    std::uint64_t seed = 1;
    int jobs = 1;

    void validate() const;
};

struct RetentionResult {
    std::vector<double> t;
    std::vector<double> signal;
    std::vector<double> signal_stderr;
    std::vector<double> noise;
    std::vector<double> snr;
    /// First time SNR drops below 1 (linear interpolation); +inf if never.
    double lifetime = std::numeric_limits<double>::infinity();
    /// No plasticity events (r = 0): SNR stays at its initial value.
    bool degenerate = false;
};

RetentionResult retention_experiment(const RetentionParams& params);

/// 0 followed by `count` log-spaced times in [t_min, t_max].
std::vector<double> retention_grid(double t_min, double t_max, int count);

/// Stationary level distribution of the candidate-event chain.
std::vector<double> stationary_levels(int states, double q, double f_plus, double f_minus, BoundMode bounds);

/// `t,snr` with 9 significant digits.
void write_retention_csv(std::ostream& out, const RetentionResult& result);

}  // namespace soen
