#include "nshift/kernels.hpp"

namespace nshift::kernels::scalar {

void axpy(double* out, const double* x, double a, const double* k, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * k[i];
}

void rk4_combine(double* out, const double* x, double c, const double* k1,
                 const double* k2, const double* k3, const double* k4,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = (k2[i] + k3[i]) * 2.0;
    s = s + k1[i];
    s = s + k4[i];
    out[i] = x[i] + c * s;
  }
}

}  // namespace nshift::kernels::scalar
