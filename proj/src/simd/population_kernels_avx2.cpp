#include "soen/simd/population_kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace soen::simd {

#if defined(__AVX2__)

namespace {

// Adds the eight int32 lanes of v to two int64x4 accumulators.
inline void widen_add(__m256i v, __m256i& acc) {
    acc = _mm256_add_epi64(acc, _mm256_cvtepi32_epi64(_mm256_castsi256_si128(v)));
    acc = _mm256_add_epi64(acc, _mm256_cvtepi32_epi64(_mm256_extracti128_si256(v, 1)));
}

inline std::int64_t hsum(__m256i v) {
    alignas(32) std::int64_t t[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(t), v);
    return t[0] + t[1] + t[2] + t[3];
}

}  // namespace

PopulationSums population_sums_avx2(const std::int32_t* a, const std::int32_t* b, const std::int32_t* s,
                                    std::size_t n) {
    __m256i sum = _mm256_setzero_si256(), sq = sum, sd = sum, dsq = sum;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
        const __m256i vs = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(s + i));
        const __m256i d = _mm256_sub_epi32(va, vb);
        // Products of values below 2^15 fit in int32.
        widen_add(va, sum);
        widen_add(_mm256_mullo_epi32(va, va), sq);
        widen_add(_mm256_mullo_epi32(vs, d), sd);
        widen_add(_mm256_mullo_epi32(d, d), dsq);
    }
    PopulationSums r{hsum(sum), hsum(sq), hsum(sd), hsum(dsq)};
    const PopulationSums tail = population_sums_scalar(a + i, b + i, s + i, n - i);
    r.sum += tail.sum;
    r.sum_sq += tail.sum_sq;
    r.signed_diff += tail.signed_diff;
    r.diff_sq += tail.diff_sq;
    return r;
}

#else

PopulationSums population_sums_avx2(const std::int32_t* a, const std::int32_t* b, const std::int32_t* s,
                                    std::size_t n) {
    return population_sums_scalar(a, b, s, n);
}

#endif

}  // namespace soen::simd
