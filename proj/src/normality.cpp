#include "nshift/normality.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nshift/error.hpp"

namespace nshift {

namespace {

struct Lowered {
  FrameData frame;
  Vec F;       // F^k
  Vec F_cov;   // F_i
  Mat vel;     // ∇̃_iF_j
  Mat spat;    // ∇_iF_j
};

Lowered lowered(const FieldAtPoint& field, const Vec& v) {
  Lowered L;
  L.frame = make_frame(field.geo.g, v);
  L.F = field.F;
  L.F_cov = field.geo.g * field.F;
  L.vel = field.grad.velocity * field.geo.g;
  L.spat = field.grad.spatial * field.geo.g;
  return L;
}

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Point on the unit sphere S^{n-1} from n−1 numbers in [0,1).
Vec sphere_point(int n, const double* u) {
  Vec s(n);
  double sin_prod = 1.0;
  for (int a = 0; a < n - 2; ++a) {
    const double theta = std::acos(1.0 - 2.0 * u[a]);
    s[a] = sin_prod * std::cos(theta);
    sin_prod *= std::sin(theta);
  }
  const double phi = 2.0 * std::numbers::pi * u[n - 2];
  s[n - 2] = sin_prod * std::cos(phi);
  s[n - 1] = sin_prod * std::sin(phi);
  return s;
}

FamilyStats stats(const std::vector<ResidualSample>& samples, double ResidualSample::*norm) {
  FamilyStats st;
  double sum = 0.0;
  for (const auto& s : samples) {
    const double x = s.*norm;
    if (!(x <= st.max)) st.max = x;  // NaN sticks
    sum += x;
  }
  st.mean = sum / static_cast<double>(samples.size());
  return st;
}

}  // namespace

WeakResidual weak_residual(const FieldAtPoint& field, const Vec& v) {
  const Lowered L = lowered(field, v);
  const double s = L.frame.speed;
  const Mat& P = L.frame.P;
  const Vec& N = L.frame.N;

  const Vec c = L.F_cov / s + P.transpose() * L.F_cov / s + L.vel * N;

  const Mat sym = L.spat + L.spat.transpose();
  const double vel_NN = N.dot(L.vel * N);
  const Vec d = sym * N - 2.0 * L.F_cov * L.F_cov.dot(N) / (s * s) +
                L.vel.transpose() * L.F / s - vel_NN * L.F_cov / s;
  return {P.transpose() * c, P.transpose() * d};
}

Vec raw_first_residual(const FieldAtPoint& field, const Vec& v) {
  const Lowered L = lowered(field, v);
  const Vec a = 2.0 * L.F_cov + L.vel * v;
  return L.frame.P.transpose() * a;
}

Vec raw_second_residual(const FieldAtPoint& field, const Vec& v) {
  const Lowered L = lowered(field, v);
  const double s = L.frame.speed;
  const Vec& N = L.frame.N;
  const Vec b = L.spat.transpose() * v + L.spat * v + L.vel.transpose() * L.F -
                2.0 * L.F_cov * N.dot(L.F_cov) / s - L.F_cov * N.dot(L.vel * N);
  return L.frame.P.transpose() * b;
}

AdditionalResidual additional_residual(const FieldAtPoint& field, const Vec& v) {
  const Lowered L = lowered(field, v);
  const int n = static_cast<int>(v.size());
  const double s = L.frame.speed;
  const Mat& P = L.frame.P;

  // M(i,j) = F_i N^m ∇̃_mF_j / v − ∇_iF_j
  const Vec Nvel = L.vel.transpose() * L.frame.N;  // Σ_m N^m ∇̃_mF_j
  const Mat M = L.F_cov * Nvel.transpose() / s - L.spat;
  AdditionalResidual out;
  out.A1 = P.transpose() * (M - M.transpose()) * P;

  const Mat core = P * field.grad.velocity.transpose() * P;
  out.A2 = core - (core.trace() / static_cast<double>(n - 1)) * P;
  return out;
}

WeakResidual weak_residual(const Manifold& m, const ForceField& f, const TangentPoint& q) {
  return weak_residual(evaluate_field(m, f, q, false), q.v);
}

Vec raw_first_residual(const Manifold& m, const ForceField& f, const TangentPoint& q) {
  return raw_first_residual(evaluate_field(m, f, q, false), q.v);
}

Vec raw_second_residual(const Manifold& m, const ForceField& f, const TangentPoint& q) {
  return raw_second_residual(evaluate_field(m, f, q, false), q.v);
}

AdditionalResidual additional_residual(const Manifold& m, const ForceField& f,
                                       const TangentPoint& q) {
  return additional_residual(evaluate_field(m, f, q, false), q.v);
}

double covector_norm(const Mat& g_inv, const Vec& a) {
  return std::sqrt(std::max(0.0, a.dot(g_inv * a)));
}

double covariant2_norm(const Mat& g_inv, const Mat& A) {
  return std::sqrt(std::max(0.0, (g_inv * A * g_inv * A.transpose()).trace()));
}

double mixed_norm(const Mat& g, const Mat& g_inv, const Mat& A) {
  return std::sqrt(std::max(0.0, (A.transpose() * g * A * g_inv).trace()));
}

ResidualSample residual_sample(const Manifold& m, const ForceField& f, const TangentPoint& q) {
  const FieldAtPoint field = evaluate_field(m, f, q, false);
  const WeakResidual w = weak_residual(field, q.v);
  const AdditionalResidual a = additional_residual(field, q.v);
  ResidualSample s;
  s.q = q;
  s.R1 = w.R1;
  s.R2 = w.R2;
  s.A1 = a.A1;
  s.A2 = a.A2;
  s.norm_R1 = covector_norm(field.geo.g_inv, w.R1);
  s.norm_R2 = covector_norm(field.geo.g_inv, w.R2);
  s.norm_A1 = covariant2_norm(field.geo.g_inv, a.A1);
  s.norm_A2 = mixed_norm(field.geo.g, field.geo.g_inv, a.A2);
  return s;
}

std::vector<TangentPoint> sample_points(const Manifold& m, const SamplerConfig& cfg) {
  const int n = m.dim();
  if (cfg.x_lo.size() != n || cfg.x_hi.size() != n) {
    throw Error("sampler box dimension does not match the manifold");
  }
  if (!(cfg.v_min > 0.0) || !(cfg.v_max >= cfg.v_min)) {
    throw Error("sampler needs 0 < v_min <= v_max");
  }
  if (cfg.shells < 1) throw Error("sampler needs at least one shell");

  const int dims = 2 * n - 1;
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> shift(dims);
  for (auto& s : shift) s = unit_double(rng);

  std::vector<double> radii(cfg.shells);
  for (int k = 0; k < cfg.shells; ++k) {
    const double t = cfg.shells == 1 ? 0.0 : static_cast<double>(k) / (cfg.shells - 1);
    radii[k] = cfg.v_min * std::pow(cfg.v_max / cfg.v_min, t);
  }

  std::vector<TangentPoint> out;
  out.reserve(cfg.count);
  std::vector<double> u(dims);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    for (int d = 0; d < dims; ++d) {
      u[d] = std::fmod(radical_inverse(i + 1, kPrimes[d]) + shift[d], 1.0);
    }
    Vec x(n);
    for (int k = 0; k < n; ++k) x[k] = cfg.x_lo[k] + u[k] * (cfg.x_hi[k] - cfg.x_lo[k]);
    const Mat E = orthonormal_frame(m.metric_at(x).g);
    const Vec s = sphere_point(n, u.data() + n);
    out.push_back({x, radii[i % cfg.shells] * (E * s)});
  }
  return out;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::WeakNormal: return "weak-normal";
    case Verdict::CompleteNormal: return "complete-normal";
    case Verdict::Neither: return "neither";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ResidualReport classify(const Manifold& m, const ForceField& f, const SamplerConfig& cfg,
                        double tol) {
  if (!(tol > 0.0)) throw Error("tolerance must be positive");
  const auto points = sample_points(m, cfg);
  if (points.empty()) throw Error("empty sample set");

  ResidualReport rep;
  rep.tolerance = tol;
  rep.samples.reserve(points.size());
  for (const auto& q : points) rep.samples.push_back(residual_sample(m, f, q));

  rep.R1 = stats(rep.samples, &ResidualSample::norm_R1);
  rep.R2 = stats(rep.samples, &ResidualSample::norm_R2);
  rep.A1 = stats(rep.samples, &ResidualSample::norm_A1);
  rep.A2 = stats(rep.samples, &ResidualSample::norm_A2);
  rep.weak_max = std::max(rep.R1.max, rep.R2.max);
  rep.additional_max = std::max(rep.A1.max, rep.A2.max);
  if (std::isnan(rep.R1.max) || std::isnan(rep.R2.max)) rep.weak_max = NAN;
  if (std::isnan(rep.A1.max) || std::isnan(rep.A2.max)) rep.additional_max = NAN;

  const double band = 100.0 * tol;
  if (!std::isfinite(rep.weak_max)) {
    rep.verdict = Verdict::Inconclusive;
    rep.notes.push_back("non-finite weak residual");
    return rep;
  }
  if (rep.weak_max > tol) {
    rep.verdict = rep.weak_max < band ? Verdict::Inconclusive : Verdict::Neither;
    return rep;
  }
  if (m.dim() == 2) {
    rep.notes.push_back("additional equations are trivially satisfied for n = 2");
  }
  if (!std::isfinite(rep.additional_max)) {
    rep.verdict = Verdict::Inconclusive;
    rep.notes.push_back("non-finite additional residual");
  } else if (rep.additional_max <= tol) {
    rep.verdict = Verdict::CompleteNormal;
  } else {
    rep.verdict = rep.additional_max < band ? Verdict::Inconclusive : Verdict::WeakNormal;
  }
  return rep;
}

}  // namespace nshift
