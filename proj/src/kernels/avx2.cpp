#include <immintrin.h>

#include "nshift/kernels.hpp"

namespace nshift::kernels::avx2 {

void axpy(double* out, const double* x, double a, const double* k, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vk = _mm256_loadu_pd(k + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(out + i, _mm256_add_pd(vx, _mm256_mul_pd(va, vk)));
  }
  scalar::axpy(out + i, x + i, a, k + i, n - i);
}

void rk4_combine(double* out, const double* x, double c, const double* k1,
                 const double* k2, const double* k3, const double* k4,
                 std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s = _mm256_mul_pd(
        _mm256_add_pd(_mm256_loadu_pd(k2 + i), _mm256_loadu_pd(k3 + i)), two);
    s = _mm256_add_pd(s, _mm256_loadu_pd(k1 + i));
    s = _mm256_add_pd(s, _mm256_loadu_pd(k4 + i));
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(vc, s)));
  }
  scalar::rk4_combine(out + i, x + i, c, k1 + i, k2 + i, k3 + i, k4 + i, n - i);
}

}  // namespace nshift::kernels::avx2
