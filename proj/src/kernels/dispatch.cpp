#include <cstdlib>
#include <string>

#include "nshift/error.hpp"
#include "nshift/kernels.hpp"

namespace nshift::kernels {

namespace {

using AxpyFn = void (*)(double*, const double*, double, const double*, std::size_t);
using CombineFn = void (*)(double*, const double*, double, const double*,
                           const double*, const double*, const double*,
                           std::size_t);

struct Table {
  Backend backend;
  AxpyFn axpy;
  CombineFn combine;
};

bool cpu_has_avx2() {
#if defined(NSHIFT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Table table_for(Backend b) {
  switch (b) {
#if defined(NSHIFT_HAVE_AVX2)
    case Backend::Avx2: return {b, &avx2::axpy, &avx2::rk4_combine};
#endif
#if defined(NSHIFT_HAVE_NEON)
    case Backend::Neon: return {b, &neon::axpy, &neon::rk4_combine};
#endif
    default: return {Backend::Scalar, &scalar::axpy, &scalar::rk4_combine};
  }
}

Backend detect() {
  if (const char* env = std::getenv("NSHIFT_KERNELS")) {
    std::string want(env);
    if (want == "scalar") return Backend::Scalar;
    if (want == "avx2" && backend_available(Backend::Avx2)) return Backend::Avx2;
    if (want == "neon" && backend_available(Backend::Neon)) return Backend::Neon;
  }
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

Table& active() {
  static Table t = table_for(detect());
  return t;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "?";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
    case Backend::Neon:
#if defined(NSHIFT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return active().backend; }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw Error("kernel backend " + std::string(backend_name(b)) +
                " is not available on this machine");
  }
  active() = table_for(b);
}

void axpy(std::span<double> out, std::span<const double> x, double a,
          std::span<const double> k) {
  active().axpy(out.data(), x.data(), a, k.data(), out.size());
}

void rk4_combine(std::span<double> out, std::span<const double> x, double c,
                 std::span<const double> k1, std::span<const double> k2,
                 std::span<const double> k3, std::span<const double> k4) {
  active().combine(out.data(), x.data(), c, k1.data(), k2.data(), k3.data(),
                   k4.data(), out.size());
}

}  // namespace nshift::kernels
