#pragma once

// Elementwise state-update kernels used by the integrator.
//
// Every backend performs the same IEEE operations in the same order (no
// fused multiply-add, no reassociation), so results are bitwise identical
// across backends. Selection happens once at startup from the CPU features;
// NSHIFT_KERNELS=scalar|avx2|neon overrides it.

#include <cstddef>
#include <span>
#include <string_view>

namespace nshift::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
/// Throws nshift::Error if the backend is not compiled in or unsupported.
void set_backend(Backend b);

/// out[i] = x[i] + a * k[i]
void axpy(std::span<double> out, std::span<const double> x, double a,
          std::span<const double> k);

/// out[i] = x[i] + c * (((k2[i] + k3[i]) * 2 + k1[i]) + k4[i])
void rk4_combine(std::span<double> out, std::span<const double> x, double c,
                 std::span<const double> k1, std::span<const double> k2,
                 std::span<const double> k3, std::span<const double> k4);

namespace scalar {
void axpy(double* out, const double* x, double a, const double* k, std::size_t n);
void rk4_combine(double* out, const double* x, double c, const double* k1,
                 const double* k2, const double* k3, const double* k4,
                 std::size_t n);
}  // namespace scalar

namespace avx2 {
void axpy(double* out, const double* x, double a, const double* k, std::size_t n);
void rk4_combine(double* out, const double* x, double c, const double* k1,
                 const double* k2, const double* k3, const double* k4,
                 std::size_t n);
}  // namespace avx2

namespace neon {
void axpy(double* out, const double* x, double a, const double* k, std::size_t n);
void rk4_combine(double* out, const double* x, double c, const double* k1,
                 const double* k2, const double* k3, const double* k4,
                 std::size_t n);
}  // namespace neon

}  // namespace nshift::kernels
