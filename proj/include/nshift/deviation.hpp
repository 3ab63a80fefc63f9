#pragma once

// Functions of deviation φ = (v | τ) and their closed-form time derivatives
//   φ̇ = (F | τ) + (v | ∇ₜτ)
//   φ̈ = α_r ∇ₜτ^r + β_r τ^r
//   α_r = 2F_r + v^s ∇̃_r F_s
//   β_r = v^s(∇_s F_r + ∇_r F_s) + F^s ∇̃_s F_r

#include <cstddef>
#include <string>
#include <vector>

#include "nshift/dynamics.hpp"
#include "nshift/sphere.hpp"

namespace nshift {

struct AlphaBeta {
  Vec alpha;  // covector
  Vec beta;   // covector
};

double phi(const Manifold& m, const TangentPoint& q, const Vec& tau);
double phi(const Mat& g, const Vec& v, const Vec& tau);
double phi_dot(const NewtonSystem& sys, const TangentPoint& q,
               const VariationState& vs);

AlphaBeta alpha_beta(const NewtonSystem& sys, const TangentPoint& q);
AlphaBeta alpha_beta(const FieldAtPoint& field, const Vec& v);

double phi_ddot(const NewtonSystem& sys, const TangentPoint& q,
                const VariationState& vs);

struct DeviationSeries {
  std::vector<double> times;
  std::vector<double> phi;
  std::vector<double> phi_dot;   // closed form
  std::vector<double> phi_ddot;  // closed form
};

/// φ, φ̇, φ̈ at every node for one variation of the record.
DeviationSeries deviation_series(const NewtonSystem& sys,
                                 const TrajectoryRecord& record,
                                 std::size_t variation);

struct InitialLimit {
  double phi0 = 0.0;
  double phi_dot0 = 0.0;
  double phi_ddot_limit = 0.0;      // ν0 α_r K^r
  double phi_dddot_estimate = 0.0;  // one-sided second-order difference of φ̈
};

/// Per sphere direction, per tangent K_a: the initial-instant behaviour of
/// the blow-up deviation functions with initial data x = p0, v = ν0 n,
/// τ = 0, ∇ₜτ = ν0 K_a. The third-derivative estimate uses φ̈ at t = 0, h, 2h.
std::vector<std::vector<InitialLimit>> initial_limits(
    const NewtonSystem& sys, const Vec& p0, double nu0,
    const std::vector<SphereSample>& directions, double step);

struct RankResult {
  std::vector<double> singular_values;  // descending
  double ratio = 0.0;                   // σ3/σ1
  std::size_t rows = 0;
  std::size_t nodes = 0;
  bool inconclusive = false;
  std::string note;
};

/// Singular values of the (variations × nodes) matrix of φ samples over
/// t ∈ [t0, t1], each row scaled by its max |φ|. Needs ≥ 4 variations and
/// ≥ 8 nodes in the window.
RankResult deviation_rank(const Manifold& m, const TrajectoryRecord& record,
                          double t0, double t1);

}  // namespace nshift
