#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nshift/error.hpp"
#include "nshift/identities.hpp"
#include "nshift/normality.hpp"
#include "nshift/systems.hpp"

using namespace nshift;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

SamplerConfig box(int n, double half, std::size_t count = 1000) {
  SamplerConfig c;
  c.x_lo = Vec::Constant(n, -half);
  c.x_hi = Vec::Constant(n, half);
  c.count = count;
  return c;
}

const std::vector<std::string> kSpeedDrag2 = {"-0.3*v1*sqrt(v1^2+v2^2)", "-0.3*v2*sqrt(v1^2+v2^2)"};

}  // namespace

TEST(WeakResidual, ZeroForce) {
  const Manifold m = Manifold::parse(2, {{"1", "0"}, {"0", "sin(x1)^2"}});
  const WeakResidual r = weak_residual(m, ForceField::zero(2), {vec({1.0, 0.3}), vec({0.4, 0.9})});
  EXPECT_EQ(r.R1, Vec::Zero(2));
  EXPECT_EQ(r.R2, Vec::Zero(2));
}

TEST(WeakResidual, ConstantForceExample) {
  const Manifold m = Manifold::euclidean(2);
  const ForceField f = ForceField::parse(2, {"1", "0"});
  const TangentPoint q{vec({0.3, -1.2}), vec({0, 1})};
  const WeakResidual r = weak_residual(m, f, q);
  EXPECT_NEAR((r.R1 - vec({2, 0})).norm(), 0.0, 1e-15);
  EXPECT_NEAR(r.R2.norm(), 0.0, 1e-15);
  EXPECT_NEAR((raw_first_residual(m, f, q) - vec({2, 0})).norm(), 0.0, 1e-15);
}

TEST(WeakResidual, ProportionalToVelocityVanishes) {
  const Manifold m = Manifold::euclidean(2);
  const ForceField f = ForceField::parse(2, {"0.5*v1", "0.5*v2"});
  for (const TangentPoint& q : sample_points(m, box(2, 2.0, 100))) {
    const WeakResidual r = weak_residual(m, f, q);
    EXPECT_LE(r.R1.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(r.R2.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(raw_second_residual(m, f, q).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(WeakResidual, ZeroVelocity) {
  EXPECT_THROW(weak_residual(Manifold::euclidean(2), ForceField::zero(2), {vec({0, 0}), vec({0, 0})}),
               ZeroVelocityError);
}

TEST(RawResiduals, ZeroForceAndScaling) {
  const Manifold m = Manifold::euclidean(2);
  const TangentPoint q{vec({0.3, -1.2}), vec({0.7, 1.1})};
  EXPECT_EQ(raw_first_residual(m, ForceField::zero(2), q), Vec::Zero(2));
  EXPECT_EQ(raw_second_residual(m, ForceField::zero(2), q), Vec::Zero(2));

  const ForceField f = ForceField::parse(2, {"sin(x2)*v1", "x1*v2^2+1"});
  const WeakResidual w = weak_residual(m, f, q);
  const double s = m.frame_at(q).speed;
  EXPECT_LE((raw_first_residual(m, f, q) - s * w.R1).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((raw_second_residual(m, f, q) - s * w.R2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(w.R1.norm(), 1e-3);
  EXPECT_GT(w.R2.norm(), 1e-3);
}

TEST(AdditionalResidual, ZeroAndProportional) {
  const Manifold m = Manifold::euclidean(3);
  const TangentPoint q{vec({0.1, 0.2, 0.3}), vec({0.5, -0.4, 0.8})};
  AdditionalResidual a = additional_residual(m, ForceField::zero(3), q);
  EXPECT_EQ(a.A1, Mat::Zero(3, 3));
  EXPECT_EQ(a.A2, Mat::Zero(3, 3));
  a = additional_residual(m, ForceField::parse(3, {"0.5*v1", "0.5*v2", "0.5*v3"}), q);
  EXPECT_LE(a.A1.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(a.A2.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AdditionalResidual, ShearBreaksIsotropy) {
  const Manifold m = Manifold::euclidean(3);
  const ForceField f = ForceField::parse(3, {"v2", "0", "0"});
  const TangentPoint q{vec({0.1, 0.2, 0.3}), vec({0.5, -0.4, 0.8})};
  const AdditionalResidual a = additional_residual(m, f, q);
  EXPECT_GT(a.A2.cwiseAbs().maxCoeff(), 1e-2);
  // brute force: P (∂F/∂v) P − tr(P ∂F/∂v P)/2 · P
  const FrameData fr = m.frame_at(q);
  Mat J = Mat::Zero(3, 3);  // J(ε, σ) = ∂F^ε/∂v^σ
  J(0, 1) = 1.0;
  const Mat PJP = fr.P * J * fr.P;
  const Mat want = PJP - PJP.trace() / 2.0 * fr.P;
  EXPECT_LE((a.A2 - want).cwiseAbs().maxCoeff(), 1e-12) << a.A2 << "\n" << want;
}

TEST(AdditionalResidual, TwoDimensionsTrivial) {
  // for n = 2 the projected hyperplane is a line, so both families vanish
  const Manifold m = Manifold::parse(2, {{"1", "0"}, {"0", "x1^2"}});
  const ForceField f = ForceField::parse(2, {"v2*x1", "sin(v1)"});
  const AdditionalResidual a = additional_residual(m, f, {vec({1.5, 0.2}), vec({0.4, 0.9})});
  EXPECT_LE(a.A1.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(a.A2.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AdditionalResidual, SpeedDragN3Vanishes) {
  const NewtonSystem sys = bundled_system("euclid3-speed-drag").build();
  for (const TangentPoint& q : sample_points(sys.manifold, box(3, 2.0, 200))) {
    const ResidualSample s = residual_sample(sys.manifold, sys.force, q);
    EXPECT_LE(std::max({s.norm_R1, s.norm_R2, s.norm_A1, s.norm_A2}), 1e-10);
  }
}

TEST(Norms, Definitions) {
  Mat g(2, 2);
  g << 1, 0, 0, 4;
  const Mat gi = g.inverse();
  EXPECT_DOUBLE_EQ(covector_norm(gi, vec({3, 8})), 5.0);
  Mat A(2, 2);
  A << 0, 2, -2, 0;
  EXPECT_DOUBLE_EQ(covariant2_norm(gi, A), std::sqrt(2 * 4 * 0.25));
  EXPECT_DOUBLE_EQ(mixed_norm(Mat::Identity(2, 2), Mat::Identity(2, 2), A), std::sqrt(8.0));
}

TEST(Classify, ZeroForceCompleteNormal) {
  const ResidualReport r = classify(Manifold::euclidean(2), ForceField::zero(2), box(2, 2.0), 1e-10);
  EXPECT_EQ(r.verdict, Verdict::CompleteNormal);
  EXPECT_EQ(r.samples.size(), 1000u);
  EXPECT_EQ(r.weak_max, 0.0);
  ASSERT_FALSE(r.notes.empty());
  EXPECT_NE(r.notes[0].find("trivially satisfied"), std::string::npos);
}

TEST(Classify, ConstantForceNeither) {
  const SamplerConfig cfg = box(2, 2.0);
  const ResidualReport r =
      classify(Manifold::euclidean(2), ForceField::parse(2, {"1", "0"}), cfg, 1e-10);
  EXPECT_EQ(r.verdict, Verdict::Neither);
  // |R1| = 2|P F|/|v| ≤ 2/v_min
  EXPECT_GT(r.R1.max, 1.0);
  EXPECT_LE(r.R1.max, 2.0 / cfg.v_min + 1e-9);
}

TEST(Classify, SpeedDragIsWeaklyNormalHenceCompleteInTwoDimensions) {
  // every residual family vanishes, and for n = 2 the additional family is trivial,
  // so the honest verdict is complete-normal (which implies weak-normal)
  const ResidualReport r =
      classify(Manifold::euclidean(2), ForceField::parse(2, kSpeedDrag2), box(2, 2.0), 1e-10);
  EXPECT_LE(r.weak_max, 1e-10);
  EXPECT_EQ(r.verdict, Verdict::CompleteNormal);
}

TEST(Classify, InconclusiveBand) {
  SamplerConfig cfg = box(2, 1.0, 50);
  cfg.v_min = cfg.v_max = 1.0;
  cfg.shells = 1;
  // |R1| = 2·1e-8·|sin| lies in (tol, 100 tol) for most directions
  const ResidualReport r =
      classify(Manifold::euclidean(2), ForceField::parse(2, {"1e-8", "0"}), cfg, 1e-8);
  EXPECT_GT(r.weak_max, 1e-8);
  EXPECT_LT(r.weak_max, 1e-6);
  EXPECT_EQ(r.verdict, Verdict::Inconclusive);
  EXPECT_EQ(verdict_name(r.verdict), "inconclusive");
}

TEST(Classify, ShearNeitherInThreeDimensions) {
  const NewtonSystem sys = bundled_system("euclid3-shear").build();
  const ResidualReport r = classify(sys.manifold, sys.force, box(3, 2.0, 200));
  EXPECT_EQ(r.verdict, Verdict::Neither);
  EXPECT_GT(r.A2.max, 1e-3);
}

TEST(Classify, EmptySampleSetThrows) {
  EXPECT_THROW(classify(Manifold::euclidean(2), ForceField::zero(2), box(2, 1.0, 0)), Error);
}

TEST(Sampler, DeterministicAndInRange) {
  const Manifold m = Manifold::parse(2, {{"1", "0"}, {"0", "x1^2"}});
  SamplerConfig cfg;
  cfg.x_lo = vec({1, -3});
  cfg.x_hi = vec({3, 3});
  cfg.count = 300;
  cfg.seed = 42;
  const auto a = sample_points(m, cfg);
  const auto b = sample_points(m, cfg);
  ASSERT_EQ(a.size(), 300u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].x, b[i].x);
    ASSERT_EQ(a[i].v, b[i].v);
    const double s = m.frame_at(a[i]).speed;
    EXPECT_GE(s, cfg.v_min * (1 - 1e-12));
    EXPECT_LE(s, cfg.v_max * (1 + 1e-12));
    for (int k = 0; k < 2; ++k) {
      EXPECT_GE(a[i].x(k), cfg.x_lo(k));
      EXPECT_LE(a[i].x(k), cfg.x_hi(k));
    }
  }
  cfg.seed = 43;
  EXPECT_NE(sample_points(m, cfg)[0].x, a[0].x);
}

TEST(Identities, AnnihilationAndEquivalenceSuitesPass) {
  const SelftestOptions opt;
  const SuiteResult ann = projection_annihilation_suite(opt);
  const SuiteResult eq = rewrite_equivalence_suite(opt);
  EXPECT_TRUE(ann.pass()) << ann.worst;
  EXPECT_TRUE(eq.pass()) << eq.worst;
  EXPECT_LE(eq.worst, 1e-12);
  EXPECT_GE(eq.checks, bundled_systems().size() * opt.equivalence_points);
}

TEST(Identities, ResidualsAreProjected) {
  std::mt19937_64 rng(4);
  for (const auto& b : bundled_systems()) {
    const NewtonSystem sys = b.build();
    for (int t = 0; t < 50; ++t) {
      const TangentPoint q = random_tangent_point(b, sys.manifold, rng, 0.1, 10.0);
      const ResidualSample s = residual_sample(sys.manifold, sys.force, q);
      const FrameData fr = sys.manifold.frame_at(q);
      EXPECT_LE(std::fabs(s.R1.dot(fr.N)), 1e-12 * std::max(1.0, s.R1.norm())) << b.name;
      EXPECT_LE(std::fabs(s.R2.dot(fr.N)), 1e-12 * std::max(1.0, s.R2.norm())) << b.name;
      EXPECT_LE((s.A1 * fr.N).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, s.A1.norm()));
      EXPECT_LE((s.A2 * fr.N).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, s.A2.norm()));
    }
  }
}
