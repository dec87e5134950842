#include <immintrin.h>

#include "netfd/kernels.hpp"

namespace netfd::kernels {

namespace {

// Two complex doubles per register: acc_r += a * re(x), acc_s += swap(a) * im(x), y = addsub(acc_r, acc_s).
inline __m256d finish(__m256d r, __m256d s) { return _mm256_addsub_pd(r, s); }

}  // namespace

void matvec_avx2(const cd* A, int m, int n, const cd* X, int batch, cd* Y) {
    const double* a = reinterpret_cast<const double*>(A);
    const int m4 = m - m % 4, m2 = m - m % 2;
    for (int b = 0; b < batch; ++b) {
        const double* x = reinterpret_cast<const double*>(X + std::size_t(b) * n);
        double* y = reinterpret_cast<double*>(Y + std::size_t(b) * m);
        int i = 0;
        for (; i < m4; i += 4) {
            __m256d r0 = _mm256_setzero_pd(), s0 = r0, r1 = r0, s1 = r0;
            for (int k = 0; k < n; ++k) {
                const double* col = a + 2 * (std::size_t(k) * m + i);
                __m256d xr = _mm256_broadcast_sd(x + 2 * k), xi = _mm256_broadcast_sd(x + 2 * k + 1);
                __m256d a0 = _mm256_loadu_pd(col), a1 = _mm256_loadu_pd(col + 4);
                r0 = _mm256_fmadd_pd(a0, xr, r0);
                s0 = _mm256_fmadd_pd(_mm256_permute_pd(a0, 0x5), xi, s0);
                r1 = _mm256_fmadd_pd(a1, xr, r1);
                s1 = _mm256_fmadd_pd(_mm256_permute_pd(a1, 0x5), xi, s1);
            }
            _mm256_storeu_pd(y + 2 * i, finish(r0, s0));
            _mm256_storeu_pd(y + 2 * i + 4, finish(r1, s1));
        }
        for (; i < m2; i += 2) {
            __m256d r0 = _mm256_setzero_pd(), s0 = r0;
            for (int k = 0; k < n; ++k) {
                const double* col = a + 2 * (std::size_t(k) * m + i);
                __m256d a0 = _mm256_loadu_pd(col);
                r0 = _mm256_fmadd_pd(a0, _mm256_broadcast_sd(x + 2 * k), r0);
                s0 = _mm256_fmadd_pd(_mm256_permute_pd(a0, 0x5), _mm256_broadcast_sd(x + 2 * k + 1), s0);
            }
            _mm256_storeu_pd(y + 2 * i, finish(r0, s0));
        }
        if (i < m) {
            __m128d r0 = _mm_setzero_pd(), s0 = r0;
            for (int k = 0; k < n; ++k) {
                __m128d a0 = _mm_loadu_pd(a + 2 * (std::size_t(k) * m + i));
                r0 = _mm_fmadd_pd(a0, _mm_set1_pd(x[2 * k]), r0);
                s0 = _mm_fmadd_pd(_mm_permute_pd(a0, 0x1), _mm_set1_pd(x[2 * k + 1]), s0);
            }
            _mm_storeu_pd(y + 2 * i, _mm_addsub_pd(r0, s0));
        }
    }
}

}  // namespace netfd::kernels
