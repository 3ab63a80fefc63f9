#pragma once

// Weak-normality residuals, their unsimplified forms, and the additional
// residuals required for the complete normality conditions in n ≥ 3.
//
// With v = |v|_g, N = v/v, P^r_i = δ^r_i − N^r N_i, F_i = g_ik F^k:
//   R1_k = Σ_i (F_i/v + ∇̃_i(N^j F_j)) P^i_k
//   R2_k = Σ_ij (∇_iF_j + ∇_jF_i − 2F_iF_j/v²) N^j P^i_k
//        + Σ_ij (F^j ∇̃_jF_i/v − Σ_r N^r N^j ∇̃_jF_r F_i/v) P^i_k
//   A1_{εσ} = Σ P^i_ε P^j_σ [(N^m F_i ∇̃_mF_j/v − ∇_iF_j) − (i ↔ j)]
//   A2^ε_σ  = Σ P^j_σ ∇̃_jF^i P^ε_i − tr(P ∇̃F P)/(n−1) · P^ε_σ
// where ∇̃_i(N^j F_j) = P^j_i F_j / v + N^j ∇̃_iF_j.

#include <cstdint>
#include <string>
#include <vector>

#include "nshift/geometry.hpp"

namespace nshift {

struct WeakResidual {
  Vec R1;  // covector
  Vec R2;  // covector
};

struct AdditionalResidual {
  Mat A1;  // (ε, σ), covariant
  Mat A2;  // (ε, σ) = A2^ε_σ
};

/// All residual families from a single field evaluation.
struct ResidualSample {
  TangentPoint q;
  Vec R1;
  Vec R2;
  Mat A1;
  Mat A2;
  double norm_R1 = 0.0;
  double norm_R2 = 0.0;
  double norm_A1 = 0.0;
  double norm_A2 = 0.0;
};

WeakResidual weak_residual(const Manifold& m, const ForceField& f, const TangentPoint& q);
/// Σ_r (2F_r + v^s ∇̃_rF_s) P^r_i, equal to v·R1.
Vec raw_first_residual(const Manifold& m, const ForceField& f, const TangentPoint& q);
/// Unsimplified second family, equal to v·R2.
Vec raw_second_residual(const Manifold& m, const ForceField& f, const TangentPoint& q);
AdditionalResidual additional_residual(const Manifold& m, const ForceField& f,
                                       const TangentPoint& q);

// Pointwise forms on an evaluated field; all throw ZeroVelocityError at v = 0.
WeakResidual weak_residual(const FieldAtPoint& field, const Vec& v);
Vec raw_first_residual(const FieldAtPoint& field, const Vec& v);
Vec raw_second_residual(const FieldAtPoint& field, const Vec& v);
AdditionalResidual additional_residual(const FieldAtPoint& field, const Vec& v);

ResidualSample residual_sample(const Manifold& m, const ForceField& f, const TangentPoint& q);

/// g-norms: covector sqrt(g^{ij} a_i a_j); covariant 2-tensor
/// sqrt(g^{ia} g^{jb} A_ij A_ab); (1,1) tensor sqrt(g_{εa} g^{σb} A^ε_σ A^a_b).
double covector_norm(const Mat& g_inv, const Vec& a);
double covariant2_norm(const Mat& g_inv, const Mat& A);
double mixed_norm(const Mat& g, const Mat& g_inv, const Mat& A);

struct SamplerConfig {
  Vec x_lo;
  Vec x_hi;
  double v_min = 0.1;
  double v_max = 10.0;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  int shells = 8;
};

/// Rotated Halton points in the x box; velocities on log-spaced g-spheres
/// |v|_g ∈ [v_min, v_max]. Deterministic in (config, seed).
std::vector<TangentPoint> sample_points(const Manifold& m, const SamplerConfig& cfg);

enum class Verdict { WeakNormal, CompleteNormal, Neither, Inconclusive };
std::string verdict_name(Verdict v);

struct FamilyStats {
  double max = 0.0;
  double mean = 0.0;
};

struct ResidualReport {
  std::vector<ResidualSample> samples;
  FamilyStats R1, R2, A1, A2;
  double weak_max = 0.0;
  double additional_max = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double tolerance = 1e-8;
  std::vector<std::string> notes;
};

/// Verdict from sampled residual maxima. A maximum in (tol, 100·tol) is
/// inconclusive.
ResidualReport classify(const Manifold& m, const ForceField& f, const SamplerConfig& cfg,
                        double tol = 1e-8);

}  // namespace nshift
