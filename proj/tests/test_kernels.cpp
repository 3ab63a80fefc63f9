#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <vector>

#include "nshift/dynamics.hpp"
#include "nshift/error.hpp"
#include "nshift/kernels.hpp"

using namespace nshift;
using namespace nshift::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

std::vector<Backend> available() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon})
    if (backend_available(b)) out.push_back(b);
  return out;
}

class BackendGuard {
 public:
  BackendGuard() : saved_(active_backend()) {}
  ~BackendGuard() { set_backend(saved_); }

 private:
  Backend saved_;
};

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(backend_available(Backend::Scalar));
  EXPECT_EQ(backend_name(Backend::Scalar), "scalar");
  EXPECT_TRUE(backend_available(active_backend()));
}

TEST(Kernels, UnavailableBackendThrows) {
  BackendGuard guard;
  for (Backend b : {Backend::Avx2, Backend::Neon})
    if (!backend_available(b)) {
      EXPECT_THROW(set_backend(b), Error);
    }
}

TEST(Kernels, ScalarMatchesDefinition) {
  std::mt19937_64 rng(3);
  const std::size_t n = 13;
  auto x = random_vec(rng, n), k = random_vec(rng, n);
  std::vector<double> out(n);
  scalar::axpy(out.data(), x.data(), 0.25, k.data(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(out[i], x[i] + 0.25 * k[i]);

  auto k1 = random_vec(rng, n), k2 = random_vec(rng, n), k3 = random_vec(rng, n),
       k4 = random_vec(rng, n);
  scalar::rk4_combine(out.data(), x.data(), 1.0 / 6.0, k1.data(), k2.data(), k3.data(),
                      k4.data(), n);
  for (std::size_t i = 0; i < n; ++i)
    EXPECT_EQ(out[i], x[i] + (1.0 / 6.0) * (((k2[i] + k3[i]) * 2.0 + k1[i]) + k4[i]));
}

TEST(Kernels, BackendsBitwiseIdenticalAllLengths) {
  std::mt19937_64 rng(11);
  for (std::size_t n = 0; n <= 37; ++n) {
    auto x = random_vec(rng, n), k1 = random_vec(rng, n), k2 = random_vec(rng, n),
         k3 = random_vec(rng, n), k4 = random_vec(rng, n);
    std::vector<double> ref_axpy(n), ref_comb(n);
    scalar::axpy(ref_axpy.data(), x.data(), -0.37, k1.data(), n);
    scalar::rk4_combine(ref_comb.data(), x.data(), 1e-3 / 6, k1.data(), k2.data(),
                        k3.data(), k4.data(), n);
    BackendGuard guard;
    for (Backend b : available()) {
      set_backend(b);
      std::vector<double> a(n), c(n);
      axpy(a, x, -0.37, k1);
      rk4_combine(c, x, 1e-3 / 6, k1, k2, k3, k4);
      EXPECT_TRUE(same_bits(a, ref_axpy)) << backend_name(b) << " n=" << n;
      EXPECT_TRUE(same_bits(c, ref_comb)) << backend_name(b) << " n=" << n;
    }
  }
}

TEST(Kernels, IntegrationIdenticalAcrossBackends) {
  const Manifold m = Manifold::parse(2, {{"1", "0"}, {"0", "sin(x1)^2"}});
  const ForceField f = ForceField::parse(2, {"-0.3*v1*sqrt(v1^2+sin(x1)^2*v2^2)",
                                             "-0.3*v2*sqrt(v1^2+sin(x1)^2*v2^2)"});
  const NewtonSystem sys{m, f};
  FlowState init;
  init.q.x = Vec::Zero(2);
  init.q.x << 1.0, 0.2;
  init.q.v = Vec::Zero(2);
  init.q.v << 0.3, 0.9;
  VariationState vs{Vec::Zero(2), Vec::Zero(2)};
  vs.rate << 0.0, 1.0;
  init.variations = {vs};

  BackendGuard guard;
  set_backend(Backend::Scalar);
  const TrajectoryRecord ref = integrate(sys, init, 1.0, 1e-3);
  for (Backend b : available()) {
    set_backend(b);
    const TrajectoryRecord r = integrate(sys, init, 1.0, 1e-3);
    ASSERT_EQ(r.size(), ref.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      ASSERT_EQ(r.nodes[i].q.x, ref.nodes[i].q.x) << backend_name(b);
      ASSERT_EQ(r.nodes[i].q.v, ref.nodes[i].q.v) << backend_name(b);
      ASSERT_EQ(r.nodes[i].variations[0].tau, ref.nodes[i].variations[0].tau);
      ASSERT_EQ(r.nodes[i].variations[0].rate, ref.nodes[i].variations[0].rate);
    }
  }
}
