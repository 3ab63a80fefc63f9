#pragma once

// Fronts of point blow-ups and hypersurface shifts: one trajectory per grid
// direction (or surface node), carrying n−1 variation vectors.

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nshift/dynamics.hpp"
#include "nshift/expr.hpp"
#include "nshift/sphere.hpp"

namespace nshift {

struct BlowupConfig {
  Vec p0;
  double nu0 = 1.0;
  /// When set, ν(u) over u1..u{n-1} replaces the constant nu0.
  std::optional<expr::Expr> nu;
  int resolution = 64;
  double t_end = 1.0;
  double step = 1e-3;
  int output_every = 1;
};

struct HypersurfaceSpec {
  std::vector<expr::Expr> map;  // x^k(u1..u{n-1})
  Vec u_lo;
  Vec u_hi;
  int resolution = 64;          // nodes per parameter, cell-centred
  expr::Expr nu;                // ν over u1..u{n-1}
  bool flip_normal = false;
};

struct DirectionTrack {
  Vec u;
  Vec direction;  // n (g-unit)
  double nu = 0.0;
  /// Closed-form φ̇_a(0) = ν ∂ν/∂u^a + (F | τ_a(0)).
  std::vector<double> expected_slope;
  TrajectoryRecord record;
};

struct TrackAbort {
  std::size_t direction = 0;
  std::string reason;
};

struct FrontRecord {
  Manifold manifold;
  std::vector<DirectionTrack> tracks;
  int output_every = 1;
  std::optional<TrackAbort> abort;

  int dim() const noexcept { return manifold.dim(); }
  /// Nodes present in every track.
  std::size_t common_nodes() const;
  /// Indices of output nodes (every output_every-th common node).
  std::vector<std::size_t> output_nodes() const;
  bool ok() const noexcept { return !abort.has_value(); }
};

FrontRecord simulate_blowup(const NewtonSystem& sys, const BlowupConfig& cfg);

struct ShiftConfig {
  HypersurfaceSpec surface;
  double t_end = 1.0;
  double step = 1e-3;
  int output_every = 1;
};

struct SurfaceNode {
  Vec u;
  Vec x;
  std::vector<Vec> tangents;  // ∂x/∂u^a
  Vec normal;                 // g-unit, g-orthogonal to the tangents
};

/// Surface nodes of the cell-centred parameter grid. Throws GeometryError
/// on a rank-deficient Jacobian.
std::vector<SurfaceNode> surface_nodes(const Manifold& m, const HypersurfaceSpec& hs);
Vec surface_normal(const Manifold& m, const Vec& x, const std::vector<Vec>& tangents,
                   bool flip);

FrontRecord simulate_shift(const NewtonSystem& sys, const ShiftConfig& cfg);

struct FrontSample {
  double t = 0.0;
  std::vector<Vec> points;
  std::vector<Vec> velocities;
  std::vector<std::vector<VariationState>> variations;
  std::vector<std::vector<double>> phi;
  std::vector<std::vector<double>> psi;  // NaN where |τ|_g ≤ 1e-12
};

/// Front at grid node `node` of the record.
FrontSample front_at_node(const FrontRecord& rec, std::size_t node);
/// Front at time t; t must lie on the output grid (relative 1e-9 of the step).
FrontSample front_at(const FrontRecord& rec, double t);

std::string front_csv_header(int n);
/// One row per (output node, direction), ordered by node then direction.
void export_front(const FrontRecord& rec, std::ostream& out);

struct SlopeReport {
  std::vector<Vec> u;
  std::vector<std::vector<double>> measured;  // 2φ(h)/h − φ(2h)/(2h)
  std::vector<std::vector<double>> expected;
  double max_error = 0.0;
};

struct OrthogonalityReport {
  std::vector<double> times;        // output grid
  std::vector<double> max_abs_psi;  // per t; NaN when all undefined
  std::vector<double> mean_abs_psi;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  std::size_t defined = 0;
  std::size_t undefined = 0;
  bool inconclusive = false;
  SlopeReport slope;
};

OrthogonalityReport orthogonality_report(const FrontRecord& rec);
SlopeReport slope_report(const FrontRecord& rec);

struct TaylorDirection {
  // remainders at t = h, 2h, 4h
  double x_rem[3] = {0, 0, 0};
  double v_rem[3] = {0, 0, 0};
  double tau_rem[3] = {0, 0, 0};  // max over variations
  // r(2h)/r(h) and its log2; NaN when a remainder is zero
  double x_ratio = 0.0;
  double v_ratio = 0.0;
  double tau_ratio = 0.0;
  double x_order = 0.0;
  double v_order = 0.0;
  double tau_order = 0.0;
};

/// Remainders of x ≈ x0 + v0 t, v ≈ v0, τ_a ≈ τ_a(0) + (dτ_a/dt)(0) t.
std::vector<TaylorDirection> taylor_check(const FrontRecord& rec);

}  // namespace nshift
