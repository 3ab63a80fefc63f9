#pragma once

// Built-in identity suites run by the selftest command. Every suite reports
// its worst observed deviation against a fixed tolerance.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nshift/geometry.hpp"
#include "nshift/systems.hpp"

namespace nshift {

struct CheckFailure {
  std::string system;
  std::string invariant;
  double observed = 0.0;
  double tolerance = 0.0;
};

struct SuiteResult {
  std::string name;
  std::string module;
  double worst = 0.0;      // largest observed deviation (or worst ratio miss)
  double tolerance = 0.0;
  std::size_t checks = 0;
  std::vector<CheckFailure> failures;

  bool pass() const noexcept { return failures.empty(); }
};

struct SelftestOptions {
  std::uint64_t seed = 12345;
  std::size_t points = 100;      // random tangent points per system
  std::size_t equivalence_points = 1000;
  std::size_t trajectories = 10;
  GeometryOptions geometry;      // flip_riemann_sign perturbs the curvature
};

/// Random tangent point of a bundled system: x in the central half of its
/// box, |v|_g in [v_lo, v_hi].
TangentPoint random_tangent_point(const BundledSystem& sys, const Manifold& m,
                                  std::mt19937_64& rng, double v_lo, double v_hi);

/// P^r_i(x, v) built symbolically from the metric expressions.
std::vector<expr::Expr> projector_expressions(const Manifold& m);

SuiteResult metric_compatibility_suite(const SelftestOptions& opt);
SuiteResult frame_identity_suite(const SelftestOptions& opt);
SuiteResult projector_gradient_suite(const SelftestOptions& opt);
SuiteResult curvature_suite(const SelftestOptions& opt);
SuiteResult rewrite_equivalence_suite(const SelftestOptions& opt);
SuiteResult projection_annihilation_suite(const SelftestOptions& opt);
SuiteResult phi_dot_suite(const SelftestOptions& opt);
SuiteResult phi_ddot_suite(const SelftestOptions& opt);
SuiteResult chain_rule_suite(const SelftestOptions& opt);
SuiteResult variation_fidelity_suite(const SelftestOptions& opt);

/// Max over t of |(x(u+δ) − x(u−δ))/(2δ) − τ| for the initial-velocity-angle
/// family through (x0, v0); τ(0) = 0, ∇ₜτ(0) = ∂v0/∂angle.
double variation_fd_error(const NewtonSystem& sys, const Vec& x0, const Vec& v0,
                          double delta, double t_end, double step);

std::vector<SuiteResult> run_selftest(const SelftestOptions& opt);

}  // namespace nshift
