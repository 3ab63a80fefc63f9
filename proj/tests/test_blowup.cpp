#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "nshift/blowup.hpp"
#include "nshift/error.hpp"

using namespace nshift;
namespace ex = nshift::expr;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

NewtonSystem euclid(std::vector<std::string> force) {
  const int n = static_cast<int>(force.size());
  return {Manifold::euclidean(n), ForceField::parse(n, force)};
}

const std::vector<std::string> kSpeedDrag = {"-0.3*v1*sqrt(v1^2+v2^2)", "-0.3*v2*sqrt(v1^2+v2^2)"};

ex::Expr u_expr(const std::string& s, int count = 1) {
  return ex::parse(s, ex::parameter_variables(count));
}

BlowupConfig blowup_cfg(Vec p0, int resolution = 64) {
  BlowupConfig c;
  c.p0 = std::move(p0);
  c.resolution = resolution;
  return c;
}

ShiftConfig circle_shift(const std::string& nu, int resolution = 64) {
  ShiftConfig c;
  c.surface.map = {u_expr("cos(u1)"), u_expr("sin(u1)")};
  c.surface.u_lo = Vec::Constant(1, 0.0);
  c.surface.u_hi = Vec::Constant(1, 2 * kPi);
  c.surface.resolution = resolution;
  c.surface.nu = u_expr(nu);
  c.surface.flip_normal = true;
  return c;
}

double max_abs_psi(const FrontRecord& rec) { return orthogonality_report(rec).max_abs; }

}  // namespace

TEST(SphereGrid, EuclideanFourDirections) {
  const auto g = sphere_grid(Manifold::euclidean(2), vec2(0, 0), 8);
  ASSERT_EQ(g.size(), 8u);
  const double expect[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int j = 0; j < 4; ++j) {
    const SphereSample& s = g[2 * j];
    EXPECT_NEAR(s.u(0), j * kPi / 2, 1e-15);
    EXPECT_NEAR(s.direction(0), expect[j][0], 1e-15);
    EXPECT_NEAR(s.direction(1), expect[j][1], 1e-15);
    EXPECT_NEAR(s.tangents[0](0), -std::sin(s.u(0)), 1e-15);
    EXPECT_NEAR(s.tangents[0](1), std::cos(s.u(0)), 1e-15);
  }
  EXPECT_THROW(sphere_grid(Manifold::euclidean(2), vec2(0, 0), 4), Error);
}

TEST(SphereGrid, CurvedMetricAtBasePoint) {
  const Manifold m = Manifold::parse(2, {{"1", "0"}, {"0", "x1^2"}});
  const auto g = sphere_grid(m, vec2(2, 0), 8);
  EXPECT_NEAR((g[0].direction - vec2(1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((g[2].direction - vec2(0, 0.5)).norm(), 0.0, 1e-15);
}

TEST(SphereGrid, UnitAndOrthogonal) {
  const Manifold m3 = Manifold::parse(3, {{"1", "0", "0"}, {"0", "2+x1", "0.3"}, {"0", "0.3", "1"}});
  for (const Manifold& m : {Manifold::parse(2, {{"1", "0"}, {"0", "x1^2"}}), m3}) {
    const Vec p0 = Vec::Constant(m.dim(), 1.3);
    const Mat g = m.metric_at(p0).g;
    const auto grid = sphere_grid(m, p0, 16);
    if (m.dim() == 3) {
      EXPECT_EQ(grid.size(), 16u * 8u);
    }
    for (const auto& s : grid) {
      EXPECT_NEAR(inner(g, s.direction, s.direction), 1.0, 1e-12);
      ASSERT_EQ(s.tangents.size(), static_cast<std::size_t>(m.dim() - 1));
      for (const Vec& K : s.tangents) EXPECT_LE(std::fabs(inner(g, s.direction, K)), 1e-12);
    }
  }
}

TEST(SphereGrid, PolarCapsExcluded) {
  const auto grid = sphere_grid(Manifold::euclidean(3), Vec::Zero(3), 8);
  const double delta = kPi / 32;
  for (const auto& s : grid) {
    EXPECT_GE(s.u(0), delta - 1e-15);
    EXPECT_LE(s.u(0), kPi - delta + 1e-15);
  }
}

TEST(Blowup, FreeMotionCircles) {
  const NewtonSystem sys = euclid({"0", "0"});
  const Vec p0 = vec2(0.3, -0.2);
  const FrontRecord rec = simulate_blowup(sys, blowup_cfg(p0));
  ASSERT_TRUE(rec.ok());
  ASSERT_EQ(rec.tracks.size(), 64u);
  for (const auto& tr : rec.tracks) {
    EXPECT_EQ(tr.nu, 1.0);
    EXPECT_EQ((tr.record.nodes.front().q.v - tr.direction).norm(), 0.0);
    for (std::size_t i = 0; i < tr.record.size(); i += 50) {
      const double t = tr.record.times[i];
      EXPECT_LE((tr.record.nodes[i].q.x - (p0 + t * tr.direction)).norm(), 1e-12);
    }
  }
  double worst_phi = 0.0;
  for (std::size_t node : rec.output_nodes())
    for (const auto& row : front_at_node(rec, node).phi) worst_phi = std::max(worst_phi, std::fabs(row[0]));
  EXPECT_LE(worst_phi, 1e-12);
  EXPECT_LE(max_abs_psi(rec), 1e-10);
}

TEST(Blowup, RegularityAndCoverage) {
  BlowupConfig cfg = blowup_cfg(vec2(0, 0), 16);
  cfg.nu0 = 2.5;
  const FrontRecord rec = simulate_blowup(euclid({"-x1", "-x2"}), cfg);
  const auto grid = sphere_grid(rec.manifold, cfg.p0, 16);
  ASSERT_EQ(rec.tracks.size(), grid.size());
  for (std::size_t d = 0; d < grid.size(); ++d) {
    EXPECT_EQ(rec.tracks[d].u, grid[d].u);
    EXPECT_NEAR(rec.manifold.frame_at(rec.tracks[d].record.nodes[0].q).speed, 2.5, 1e-14);
  }
  cfg.nu0 = 0.0;
  EXPECT_THROW(simulate_blowup(euclid({"0", "0"}), cfg), Error);
}

TEST(Blowup, VariableNuSlope) {
  BlowupConfig cfg = blowup_cfg(vec2(0, 0), 16);
  cfg.nu = u_expr("1+0.5*sin(u1)");
  const FrontRecord rec = simulate_blowup(euclid({"0", "0"}), cfg);
  const SlopeReport s = slope_report(rec);
  ASSERT_EQ(s.u.size(), 16u);
  for (std::size_t d = 0; d < s.u.size(); ++d) {
    const double u = s.u[d](0);
    const double want = (1 + 0.5 * std::sin(u)) * 0.5 * std::cos(u);
    EXPECT_NEAR(s.measured[d][0], want, 1e-6);
    EXPECT_NEAR(s.expected[d][0], want, 1e-14);
  }
  EXPECT_NEAR(s.measured[0][0], 0.5, 1e-6);
  EXPECT_LE(s.max_error, 1e-6);

  // φ = ν ν′ t exactly, ψ independent of t
  const OrthogonalityReport orth = orthogonality_report(rec);
  EXPECT_GT(orth.max_abs, 0.1);
  const FrontSample late = front_at(rec, 1.0);
  for (std::size_t d = 0; d < rec.tracks.size(); ++d) {
    const double u = rec.tracks[d].u(0);
    const double nu = 1 + 0.5 * std::sin(u), dnu = 0.5 * std::cos(u);
    EXPECT_NEAR(late.phi[d][0], nu * dnu, 1e-12);
    EXPECT_NEAR(late.psi[d][0], dnu / std::sqrt(dnu * dnu + nu * nu), 1e-12);
  }
}

TEST(Blowup, ConstantNuSlopeVanishes) {
  const FrontRecord rec = simulate_blowup(euclid({"0", "0"}), blowup_cfg(vec2(0, 0), 16));
  const SlopeReport s = slope_report(rec);
  for (const auto& row : s.measured) EXPECT_LE(std::fabs(row[0]), 1e-10);
}

TEST(Blowup, SpeedDragOrthogonal) {
  const FrontRecord rec = simulate_blowup(euclid(kSpeedDrag), blowup_cfg(vec2(0, 0)));
  EXPECT_LE(max_abs_psi(rec), 1e-6);
}

TEST(Blowup, ConstantForceTilts) {
  const OrthogonalityReport r = orthogonality_report(simulate_blowup(euclid({"1", "0"}), blowup_cfg(vec2(0, 0))));
  EXPECT_GE(r.max_abs, 1e-2);
  EXPECT_EQ(r.times.size(), 1001u);
  EXPECT_TRUE(std::isnan(r.max_abs_psi[0]));  // τ(0) = 0
  EXPECT_EQ(r.undefined, 64u);
  EXPECT_FALSE(r.inconclusive);
}

TEST(Blowup, ThreeDimensionalFreeMotion) {
  BlowupConfig cfg = blowup_cfg(Vec::Zero(3), 8);
  cfg.t_end = 0.2;
  const FrontRecord rec = simulate_blowup(euclid({"0", "0", "0"}), cfg);
  EXPECT_EQ(rec.tracks.size(), 32u);
  EXPECT_LE(max_abs_psi(rec), 1e-10);
}

TEST(Blowup, SingleTrackMatchesDirectIntegration) {
  const NewtonSystem sys = euclid({"-x1", "-0.5*x2+0.1*v1"});
  const BlowupConfig cfg = blowup_cfg(vec2(0.4, 0.1), 8);
  const FrontRecord rec = simulate_blowup(sys, cfg);
  const auto grid = sphere_grid(sys.manifold, cfg.p0, 8);
  const std::size_t d = 3;
  FlowState init{{cfg.p0, cfg.nu0 * grid[d].direction},
                 {{Vec::Zero(2), cfg.nu0 * grid[d].tangents[0]}}};
  const TrajectoryRecord direct = integrate(sys, init, cfg.t_end, cfg.step);
  const TrajectoryRecord& tr = rec.tracks[d].record;
  ASSERT_EQ(direct.size(), tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    ASSERT_EQ(direct.nodes[i].q.x, tr.nodes[i].q.x);
    ASSERT_EQ(direct.nodes[i].q.v, tr.nodes[i].q.v);
    ASSERT_EQ(direct.nodes[i].variations[0].tau, tr.nodes[i].variations[0].tau);
    ASSERT_EQ(direct.nodes[i].variations[0].rate, tr.nodes[i].variations[0].rate);
  }
}

TEST(Blowup, AbortIsRecorded) {
  BlowupConfig cfg = blowup_cfg(vec2(0, 0), 8);
  cfg.t_end = 3.0;
  const FrontRecord rec = simulate_blowup(euclid({"sqrt(1-x1)", "0"}), cfg);
  ASSERT_FALSE(rec.ok());
  EXPECT_EQ(rec.abort->direction, 0u);
  EXPECT_LT(rec.common_nodes(), 3001u);
}

TEST(FrontAt, RadiusHalfCircle) {
  const Vec p0 = vec2(0, 0);
  const FrontRecord rec = simulate_blowup(euclid({"0", "0"}), blowup_cfg(p0, 8));
  const FrontSample s = front_at(rec, 0.5);
  EXPECT_EQ(s.t, 0.5);
  ASSERT_EQ(s.points.size(), 8u);
  for (const Vec& x : s.points) EXPECT_LE(std::fabs((x - p0).norm() - 0.5), 1e-12);
  EXPECT_THROW(front_at(rec, 0.5004), Error);
  EXPECT_THROW(front_at(rec, 1.5), Error);
  EXPECT_THROW(front_at_node(rec, 5000), Error);
}

TEST(FrontAt, OutputEveryRestrictsGrid) {
  BlowupConfig cfg = blowup_cfg(vec2(0, 0), 8);
  cfg.output_every = 10;
  const FrontRecord rec = simulate_blowup(euclid({"0", "0"}), cfg);
  EXPECT_EQ(rec.output_nodes().size(), 101u);
  EXPECT_NO_THROW(front_at(rec, 0.5));
  EXPECT_THROW(front_at(rec, 0.505), Error);
}

TEST(Export, HeaderAndRows) {
  EXPECT_EQ(front_csv_header(2), "t,dir_index,u1,x1,x2,v1,v2,tau1_1,tau1_2,phi_1,psi_1");
  EXPECT_EQ(front_csv_header(3),
            "t,dir_index,u1,u2,x1,x2,x3,v1,v2,v3,tau1_1,tau1_2,tau1_3,tau2_1,tau2_2,tau2_3,"
            "phi_1,phi_2,psi_1,psi_2");
  BlowupConfig cfg = blowup_cfg(vec2(0, 0), 8);
  cfg.t_end = 0.01;
  const FrontRecord rec = simulate_blowup(euclid({"0", "0"}), cfg);
  std::ostringstream out;
  export_front(rec, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, front_csv_header(2));
  std::size_t rows = 0;
  std::size_t nan_rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
    if (line.size() >= 4 && line.substr(line.size() - 4) == ",nan") ++nan_rows;
  }
  EXPECT_EQ(rows, rec.tracks.size() * rec.output_nodes().size());
  EXPECT_EQ(nan_rows, 8u);  // ψ undefined at t = 0 only
}

TEST(Taylor, FreeMotionExact) {
  for (const auto& d : taylor_check(simulate_blowup(euclid({"0", "0"}), blowup_cfg(vec2(0.2, 0.1), 8)))) {
    for (int i = 0; i < 3; ++i) {
      EXPECT_LE(d.x_rem[i], 1e-15);
      EXPECT_LE(d.v_rem[i], 1e-15);
      EXPECT_LE(d.tau_rem[i], 1e-15);
    }
  }
}

TEST(Taylor, HarmonicOrders) {
  const auto dirs = taylor_check(simulate_blowup(euclid({"-x1", "-x2"}), blowup_cfg(vec2(1, 0), 8)));
  ASSERT_EQ(dirs.size(), 8u);
  for (const auto& d : dirs) {
    EXPECT_NEAR(d.x_ratio, 4.0, 0.05);
    EXPECT_NEAR(d.v_ratio, 2.0, 0.05);
    EXPECT_NEAR(d.x_order, 2.0, 0.02);
    EXPECT_NEAR(d.v_order, 1.0, 0.02);
    EXPECT_GE(d.tau_order, 2.0 - 0.02);  // τ − ν0 K t = O(t²) at worst
  }
}

TEST(Shift, UnitCircleConcentric) {
  const FrontRecord rec = simulate_shift(euclid({"0", "0"}), circle_shift("1"));
  ASSERT_TRUE(rec.ok());
  EXPECT_EQ(rec.tracks.size(), 64u);
  for (double t : {0.0, 0.25, 1.0}) {
    const FrontSample s = front_at(rec, t);
    for (const Vec& x : s.points) EXPECT_LE(std::fabs(x.norm() - (1 + t)), 1e-12);
  }
  EXPECT_LE(max_abs_psi(rec), 1e-10);
}

TEST(Shift, VariableNuTiltsImmediately) {
  const FrontRecord rec = simulate_shift(euclid({"0", "0"}), circle_shift("1+0.5*sin(u1)", 16));
  const FrontSample s0 = front_at_node(rec, 0);
  const SlopeReport slope = slope_report(rec);
  for (std::size_t d = 0; d < rec.tracks.size(); ++d) {
    EXPECT_NEAR(s0.phi[d][0], 0.0, 1e-15);
    const double u = rec.tracks[d].u(0);
    const double want = (1 + 0.5 * std::sin(u)) * 0.5 * std::cos(u);
    EXPECT_NEAR(rec.tracks[d].expected_slope[0], want, 1e-8);
    EXPECT_NEAR(slope.measured[d][0], want, 1e-6);
  }
  EXPECT_GT(max_abs_psi(rec), 0.1);
}

TEST(Shift, LineUnderSpeedDragStaysNormal) {
  ShiftConfig c;
  c.surface.map = {u_expr("u1"), u_expr("0")};
  c.surface.u_lo = Vec::Constant(1, -1.0);
  c.surface.u_hi = Vec::Constant(1, 1.0);
  c.surface.resolution = 16;
  c.surface.nu = u_expr("1");
  const FrontRecord rec = simulate_shift(euclid(kSpeedDrag), c);
  EXPECT_LE(max_abs_psi(rec), 1e-5);
}

TEST(Shift, SurfaceNodesAndNormals) {
  const ShiftConfig c = circle_shift("1", 8);
  const auto nodes = surface_nodes(Manifold::euclidean(2), c.surface);
  ASSERT_EQ(nodes.size(), 8u);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    EXPECT_NEAR(nodes[j].u(0), (j + 0.5) * 2 * kPi / 8, 1e-14);
    EXPECT_NEAR((nodes[j].normal - nodes[j].x).norm(), 0.0, 1e-14);  // outward
  }
  // without the flip, (T, n) is positively oriented: inward for the circle
  const Vec in = surface_normal(Manifold::euclidean(2), vec2(1, 0), {vec2(0, 1)}, false);
  EXPECT_NEAR((in - vec2(-1, 0)).norm(), 0.0, 1e-15);
}

TEST(Shift, DegenerateJacobian) {
  ShiftConfig c = circle_shift("1", 8);
  c.surface.map = {u_expr("0"), u_expr("1")};
  EXPECT_THROW(surface_nodes(Manifold::euclidean(2), c.surface), GeometryError);
  EXPECT_THROW(simulate_shift(euclid({"0", "0"}), c), GeometryError);
}
