#pragma once

// Riemannian geometry of a single chart: metric, Levi-Civita connection,
// curvature, the unit-velocity frame N / projector P, and the spatial and
// velocity gradients of extended vector fields (fields on the tangent bundle).
//
// Index conventions used throughout:
//   Christoffel (k, i, j)  = Γ^k_{ij}
//   Riemann     (k, m, s, r) = R^k_{msr}
//              = ∂_s Γ^k_{mr} − ∂_r Γ^k_{ms} + Γ^k_{sj} Γ^j_{mr} − Γ^k_{rj} Γ^j_{ms}
//   gradients   (i, k)     = ∇_i F^k  (derivative index first)
//   projector   (r, i)     = P^r_i

#include <optional>
#include <string>
#include <vector>

#include "nshift/expr.hpp"
#include "nshift/tensor.hpp"

namespace nshift {

struct TangentPoint {
  Vec x;  // chart coordinates x^k
  Vec v;  // velocity components v^k
};

struct MetricValue {
  Mat g;
  Mat inverse;
};

using ChristoffelTensor = Tensor3;
using CurvatureTensor = Tensor4;

struct FrameData {
  double speed = 0.0;  // |v|_g
  Vec N;               // N^r
  Vec N_cov;           // N_i
  Mat P;               // P^r_i = δ^r_i − N^r N_i
};

struct GradientPair {
  Mat spatial;   // ∇_i F^k
  Mat velocity;  // ∇̃_i F^k = ∂F^k/∂v^i
};

/// Metric data at one point of the chart.
struct LocalGeometry {
  Mat g;
  Mat g_inv;
  Tensor3 dg;     // ∂_s g_ij stored at (i, j, s)
  Tensor3 gamma;  // Γ^k_{ij}
  std::optional<Tensor4> riemann;
};

struct GeometryOptions {
  // Debug switch: negates R^k_{msr}. Exists so the variation-equation
  // fidelity check can be shown to catch a wrong curvature convention.
  bool flip_riemann_sign = false;
};

class Manifold {
 public:
  /// `metric` is n×n, expressions over x1..xn, textually symmetric.
  Manifold(int n, std::vector<std::vector<expr::Expr>> metric,
           GeometryOptions options = {});

  /// Parses metric text; errors are ConfigError prefixed with "metric[i][j]: ".
  static Manifold parse(int n, const std::vector<std::vector<std::string>>& metric,
                        GeometryOptions options = {});
  static Manifold euclidean(int n);

  int dim() const noexcept { return n_; }
  const expr::Expr& metric_expr(int i, int j) const { return g_[i * n_ + j]; }
  const GeometryOptions& options() const noexcept { return options_; }
  Manifold with_options(GeometryOptions options) const;
  /// True when every metric component is a constant (Γ and R vanish).
  bool is_flat_constant() const noexcept { return constant_; }

  MetricValue metric_at(const Vec& x) const;
  ChristoffelTensor christoffel_at(const Vec& x) const;
  CurvatureTensor riemann_at(const Vec& x) const;
  FrameData frame_at(const TangentPoint& q) const;

  LocalGeometry local(const Vec& x, bool with_curvature) const;

 private:
  int n_;
  std::vector<expr::Expr> g_;    // (i, j)
  std::vector<expr::Expr> dg_;   // (i, j, s)
  std::vector<expr::Expr> d2g_;  // (i, j, s, t)
  bool constant_ = false;
  GeometryOptions options_;
};

/// Frame from an already evaluated metric.
FrameData make_frame(const Mat& g, const Vec& v);

/// Extended vector field F^k(x, v) with exact first partials.
class ForceField {
 public:
  ForceField(int n, std::vector<expr::Expr> components);

  /// Errors are ConfigError prefixed with "force[k]: ".
  static ForceField parse(int n, const std::vector<std::string>& components);
  static ForceField zero(int n);

  int dim() const noexcept { return n_; }
  const expr::Expr& component(int k) const { return f_[k]; }

  struct Jacobians {
    Vec value;  // F^k
    Mat dx;     // ∂F^k/∂x^i at (i, k)
    Mat dv;     // ∂F^k/∂v^i at (i, k)
  };

  Vec value_at(const TangentPoint& q) const;
  Jacobians jacobians_at(const TangentPoint& q) const;

 private:
  int n_;
  std::vector<expr::Expr> f_;
  std::vector<expr::Expr> dfdx_;  // (i, k)
  std::vector<expr::Expr> dfdv_;  // (i, k)
};

/// Spatial and velocity gradients of F given precomputed data.
GradientPair gradients(const LocalGeometry& geo, const ForceField::Jacobians& jac,
                       const Vec& v);
GradientPair gradients_at(const Manifold& m, const ForceField& f,
                          const TangentPoint& q);

/// Force value, gradients and local geometry at one tangent point.
struct FieldAtPoint {
  LocalGeometry geo;
  Vec F;
  GradientPair grad;
};
FieldAtPoint evaluate_field(const Manifold& m, const ForceField& f,
                            const TangentPoint& q, bool with_curvature);

Vec lower(const Mat& g, const Vec& vector);
Vec raise(const Mat& g_inv, const Vec& covector);
double inner(const Mat& g, const Vec& a, const Vec& b);

/// g(p)-orthonormal frame E (columns), E^T g E = I, via Cholesky g = L L^T.
Mat orthonormal_frame(const Mat& g);

}  // namespace nshift
