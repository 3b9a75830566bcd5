// AVX2 variants of the trellis step kernels. Compiled with -mavx2 -mfma and
// only dispatched to when the CPU reports AVX2 support.

#include "memrate/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
#define MEMRATE_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define MEMRATE_HAVE_AVX2_BUILD 0
#endif

namespace memrate::kern {

#if MEMRATE_HAVE_AVX2_BUILD

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double step_reduce_avx2(const double* state_in, const double* w, const double* row,
                        const std::int32_t* gather, const std::int32_t* seg, int n_states,
                        double* state_out) {
    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
        std::int32_t j = seg[s];
        const std::int32_t j1 = seg[s + 1];
        __m256d acc = _mm256_setzero_pd();
        for (; j + 4 <= j1; j += 4) {
            __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(gather + j));
            __m256d a = _mm256_i32gather_pd(state_in, idx, 8);
            __m256d wr = _mm256_mul_pd(_mm256_loadu_pd(w + j), _mm256_loadu_pd(row + j));
            acc = _mm256_fmadd_pd(a, wr, acc);
        }
        double v = hsum(acc);
        for (; j < j1; ++j) v += state_in[gather[j]] * w[j] * row[j];
        state_out[s] = v;
        total += v;
    }
    return total;
}

double posterior_forward_avx2(const double* alpha, const double* beta, const double* w,
                              const double* row, const std::int32_t* gather,
                              const std::int32_t* seg, int n_states, double* sigma,
                              double* alpha_next, double* sigma_sum) {
    double atotal = 0.0;
    __m256d stotal = _mm256_setzero_pd();
    double stail = 0.0;
    for (int s = 0; s < n_states; ++s) {
        std::int32_t j = seg[s];
        const std::int32_t j1 = seg[s + 1];
        const __m256d bs = _mm256_set1_pd(beta[s]);
        __m256d acc = _mm256_setzero_pd();
        double tail = 0.0;
        for (; j + 4 <= j1; j += 4) {
            __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(gather + j));
            __m256d a = _mm256_i32gather_pd(alpha, idx, 8);
            __m256d m = _mm256_mul_pd(
                a, _mm256_mul_pd(_mm256_loadu_pd(w + j), _mm256_loadu_pd(row + j)));
            acc = _mm256_add_pd(acc, m);
            __m256d v = _mm256_mul_pd(m, bs);
            _mm256_storeu_pd(sigma + j, v);
            stotal = _mm256_add_pd(stotal, v);
        }
        for (; j < j1; ++j) {
            double m = alpha[gather[j]] * w[j] * row[j];
            tail += m;
            double v = m * beta[s];
            sigma[j] = v;
            stail += v;
        }
        double as = hsum(acc) + tail;
        alpha_next[s] = as;
        atotal += as;
    }
    *sigma_sum = hsum(stotal) + stail;
    return atotal;
}

void axpy_avx2(double a, const double* x, double* y, std::int64_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::int64_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelSet* avx2_kernels() {
    static const KernelSet ks{"avx2", step_reduce_avx2, posterior_forward_avx2, axpy_avx2};
    return &ks;
}

bool avx2_available() { return __builtin_cpu_supports("avx2"); }

#else

const KernelSet* avx2_kernels() { return nullptr; }
bool avx2_available() { return false; }

#endif

}  // namespace memrate::kern
