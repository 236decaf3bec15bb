#pragma once

// Behavioral (non-circuit) synapse: discrete weight levels, candidate
// plasticity events, STDP kernels and the short-term, homeostatic and
// metaplastic modulations.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace soen {

/// Counter-based uniform generator: every draw is a pure function of
/// (seed, stream, counter), so parallel workers reproduce serial results.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in (0, 1].
    double uniform_open();
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

enum class BoundMode { hard, soft };
enum class Direction { strengthen, weaken };

/// Weight w = level·α with α = 1/states; level ∈ [0, states].
struct BehavioralSynapse {
    int states = 1;  // 1/α
    int level = 0;
    double q = 1.0;
    BoundMode bounds = BoundMode::hard;
    /// Metaplastic ladder of q values (lowest rung first) and current rung.
    std::vector<double> q_ladder;
    int rung = 0;

    double alpha() const { return 1.0 / states; }
    double w() const { return static_cast<double>(level) / states; }
    void validate() const;
};

/// Probability that a candidate event in `dir` moves the weight one level.
/// Hard bounds: q away from the target bound, 0 at it. Soft bounds: q times
/// the distance from w to the target bound.
double step_probability(const BehavioralSynapse& s, Direction dir);
/// Expected |Δw| of one candidate event.
double expected_step(const BehavioralSynapse& s, Direction dir);

/// One candidate event. Returns true if the weight changed.
bool apply_candidate_event(BehavioralSynapse& s, Direction dir, CounterRng& rng);

struct PlasticityEventStream {
    double rate = 1.0;  // r, candidate events per second
    double f_plus = 0.5;
    double f_minus = 0.5;
    std::uint64_t seed = 1;
    void validate() const;
};

/// Tabulated Δw(Δt; I_su). Positive Δt (post after pre) strengthens,
/// negative Δt weakens; linear interpolation in Δt, zero outside the table.
class StdpKernel {
public:
    struct Row {
        double delta_t_ns = 0.0;
        double i_su_ua = 0.0;
        double delta_w = 0.0;
    };

    StdpKernel() = default;
    explicit StdpKernel(std::vector<Row> rows);

    /// Reads `delta_t_ns,i_su_uA,delta_w`.
    static StdpKernel read_csv(std::istream& in);
    static StdpKernel read_csv_file(const std::string& path);
    void write_csv(std::ostream& out) const;

    /// Exponential surrogate A·exp(-|Δt|/τ) per side on the standard grid.
    static StdpKernel exponential(double amplitude, double tau_ns, double i_su_ua);
    /// Standard tabulation grid (ns).
    static const std::vector<double>& standard_grid();

    /// Δw at Δt for the table row set with the given I_su (nearest tabulated value).
    double delta_w(double delta_t_ns, double i_su_ua) const;
    std::vector<double> bias_levels() const;
    const std::vector<Row>& rows() const { return rows_; }

private:
    std::vector<Row> rows_;
};

/// w ← w + Δw(t_post − t_pre), moved by whole levels toward zero change
/// (|Δw| rounded down to a multiple of α) and clamped to [0, 1].
void stdp_update(BehavioralSynapse& s, const StdpKernel& kernel, double i_su_ua, double t_pre_ns,
                 double t_post_ns);

struct ShortTermState {
    double tau_sf = 1.0;
    double tau_sd = 1.0;
    double g_sf = 0.0;
    double g_sd = 0.0;
    double sf = 0.0;
    double sd = 0.0;
};

/// Effective weight sampled at `sample_times`, with facilitation and depression
/// incremented by one at each spike and decaying exponentially in between.
std::vector<double> short_term_filter(ShortTermState state, double w, const std::vector<double>& spikes,
                                      const std::vector<double>& sample_times);

struct HomeostaticState {
    double tau_h = 1.0;
    double g_h = 0.0;
};

/// −g_H·Σ exp(−(t − t_i)/τ_H) over spikes with t_i ≤ t.
double homeostatic_update(const HomeostaticState& state, const std::vector<double>& post_spikes, double t);

enum class Correlation { up, down };

/// Moves the q rung by one (saturating) and sets q from the ladder. w is untouched.
void metaplastic_update(BehavioralSynapse& s, Correlation event);

/// Ladder of relative update sizes from kernel integrals at each bias level,
/// normalized to the largest.
std::vector<double> q_ladder_from_integrals(const std::vector<double>& integrals);

}  // namespace soen
