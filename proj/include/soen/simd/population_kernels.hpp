#pragma once

// Integer reductions over a synapse population. The scalar and AVX2 paths
// are exact and return identical results.

#include <cstddef>
#include <cstdint>

namespace soen::simd {

struct PopulationSums {
    std::int64_t sum = 0;         // Σ a
    std::int64_t sum_sq = 0;      // Σ a²
    std::int64_t signed_diff = 0; // Σ s·(a − b)
    std::int64_t diff_sq = 0;     // Σ (a − b)²

    bool operator==(const PopulationSums&) const = default;
};

/// Levels `a`, `b` and signs `s` (±1) for `n` synapses. |values| < 2^15.
PopulationSums population_sums_scalar(const std::int32_t* a, const std::int32_t* b, const std::int32_t* s,
                                      std::size_t n);
PopulationSums population_sums_avx2(const std::int32_t* a, const std::int32_t* b, const std::int32_t* s,
                                    std::size_t n);

bool avx2_available();
/// Runtime-selected path.
PopulationSums population_sums(const std::int32_t* a, const std::int32_t* b, const std::int32_t* s,
                               std::size_t n);

}  // namespace soen::simd
