#pragma once

// Newtonian flow  ẍ^k + Γ^k_{ij} ẋ^i ẋ^j = F^k(x, ẋ)  together with its
// variation vectors, integrated by fixed-step classic RK4.
//
// Variations are carried as (τ, ∇ₜτ) and obey
//   ∇ₜₜτ^k = −R^k_{msr} τ^s v^r v^m + ∇ₜτ^s ∇̃_s F^k + τ^s ∇_s F^k.
// The integrator advances plain component derivatives, so connection terms
// −Γ^k_{rs} v^r (·)^s are folded into the right-hand side.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nshift/geometry.hpp"

namespace nshift {

struct VariationState {
  Vec tau;   // τ^k
  Vec rate;  // ∇ₜτ^k
};

struct FlowState {
  TangentPoint q;
  std::vector<VariationState> variations;
};

struct NewtonSystem {
  Manifold manifold;
  ForceField force;

  int dim() const noexcept { return manifold.dim(); }
};

struct NewtonRates {
  Vec dx;
  Vec dv;
};

/// Covariant rates (∇ₜτ, ∇ₜ∇ₜτ).
struct VariationRates {
  Vec dtau;
  Vec drate;
};

NewtonRates newton_rhs(const NewtonSystem& sys, const TangentPoint& q);
VariationRates variation_rhs(const NewtonSystem& sys, const TangentPoint& q,
                             const VariationState& vs);
VariationRates variation_rhs(const FieldAtPoint& field, const Vec& v,
                             const VariationState& vs);

/// Plain time derivative of a vector field along the trajectory from its
/// covariant rate: d w/dt = ∇ₜw − Γ^k_{rs} v^r w^s.
Vec plain_from_covariant(const Tensor3& gamma, const Vec& v, const Vec& w,
                         const Vec& covariant);

struct IntegrationAbort {
  std::size_t last_good_node = 0;
  std::string reason;
};

struct TrajectoryRecord {
  double step = 0.0;
  std::vector<double> times;
  std::vector<FlowState> nodes;
  std::vector<Vec> forces;  // F^k at each node
  std::optional<IntegrationAbort> abort;

  std::size_t size() const noexcept { return nodes.size(); }
  bool ok() const noexcept { return !abort.has_value(); }
};

/// Requires step > 0 and t_end an integer multiple of step (relative 1e-9).
/// Non-finite states or evaluation failures stop the run; the partial record
/// is returned with `abort` set.
TrajectoryRecord integrate(const NewtonSystem& sys, const FlowState& init,
                           double t_end, double step);

/// Number of RK4 steps for (t_end, step); throws if not an integer.
std::size_t step_count(double t_end, double step);

/// Covariant time derivative of a per-node vector series:
/// central differences (second-order one-sided at the ends) plus Γ v w.
std::vector<Vec> covariant_rate(const Manifold& m, const TrajectoryRecord& record,
                                const std::vector<Vec>& series);

/// ∇ₜF^k = ∇_s F^k v^s + ∇̃_s F^k F^s
Vec nabla_t_force(const NewtonSystem& sys, const TangentPoint& q);

}  // namespace nshift
