#include "soen/simd/population_kernels.hpp"

namespace soen::simd {

PopulationSums population_sums_scalar(const std::int32_t* a, const std::int32_t* b, const std::int32_t* s,
                                      std::size_t n) {
    PopulationSums r;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t d = static_cast<std::int64_t>(a[i]) - b[i];
        r.sum += a[i];
        r.sum_sq += static_cast<std::int64_t>(a[i]) * a[i];
        r.signed_diff += s[i] * d;
        r.diff_sq += d * d;
    }
    return r;
}

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

PopulationSums population_sums(const std::int32_t* a, const std::int32_t* b, const std::int32_t* s,
                               std::size_t n) {
    static const bool use_avx2 = avx2_available();
    return use_avx2 ? population_sums_avx2(a, b, s, n) : population_sums_scalar(a, b, s, n);
}

}  // namespace soen::simd
