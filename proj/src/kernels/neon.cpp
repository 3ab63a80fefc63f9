#include <arm_neon.h>

#include "nshift/kernels.hpp"

namespace nshift::kernels::neon {

// vmulq/vaddq only; vfmaq would round differently from the scalar path.
void axpy(double* out, const double* x, double a, const double* k, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vk = vld1q_f64(k + i);
    float64x2_t vx = vld1q_f64(x + i);
    vst1q_f64(out + i, vaddq_f64(vx, vmulq_f64(va, vk)));
  }
  scalar::axpy(out + i, x + i, a, k + i, n - i);
}

void rk4_combine(double* out, const double* x, double c, const double* k1,
                 const double* k2, const double* k3, const double* k4,
                 std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t two = vdupq_n_f64(2.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t s = vmulq_f64(vaddq_f64(vld1q_f64(k2 + i), vld1q_f64(k3 + i)), two);
    s = vaddq_f64(s, vld1q_f64(k1 + i));
    s = vaddq_f64(s, vld1q_f64(k4 + i));
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(vc, s)));
  }
  scalar::rk4_combine(out + i, x + i, c, k1 + i, k2 + i, k3 + i, k4 + i, n - i);
}

}  // namespace nshift::kernels::neon
