#include "nshift/identities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nshift/deviation.hpp"
#include "nshift/dynamics.hpp"
#include "nshift/error.hpp"
#include "nshift/normality.hpp"

namespace nshift {

namespace {

using expr::Expr;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

Vec random_unit(std::mt19937_64& rng, int n) {
  Vec s(n);
  do {
    for (int k = 0; k < n; ++k) s[k] = uniform(rng, -1.0, 1.0);
  } while (s.norm() < 1e-3 || s.norm() > 1.0);
  return s / s.norm();
}

class Suite {
 public:
  Suite(std::string name, std::string module, double tol) {
    r_.name = std::move(name);
    r_.module = std::move(module);
    r_.tolerance = tol;
  }

  // Records a deviation; a failure is listed once per (system, invariant).
  void observe(const std::string& system, const std::string& invariant, double value) {
    ++r_.checks;
    if (!(value <= r_.worst)) r_.worst = value;
    if (value <= r_.tolerance) return;
    for (auto& f : r_.failures) {
      if (f.system == system && f.invariant == invariant) {
        if (!(value <= f.observed)) f.observed = value;
        return;
      }
    }
    r_.failures.push_back({system, invariant, value, r_.tolerance});
  }

  void error(const std::string& system, const std::string& invariant, const Error& e) {
    ++r_.checks;
    r_.worst = NAN;
    r_.failures.push_back({system, invariant + ": " + e.what(), NAN, r_.tolerance});
  }

  SuiteResult result() const { return r_; }

 private:
  SuiteResult r_;
};

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::vector<double> pack(const TangentPoint& q) {
  std::vector<double> values(q.x.data(), q.x.data() + q.x.size());
  values.insert(values.end(), q.v.data(), q.v.data() + q.v.size());
  return values;
}

Expr velocity_var(int n, int k) {
  return Expr::variable("v" + std::to_string(k + 1), static_cast<std::size_t>(n + k));
}

const char* const kFidelitySystems[] = {"euclid2-harmonic", "sphere-geodesic",
                                        "sphere-speed-drag", "polar-central",
                                        "euclid3-shear"};

FlowState random_flow(const BundledSystem& b, const Manifold& m, std::mt19937_64& rng) {
  FlowState s;
  s.q = random_tangent_point(b, m, rng, 0.3, 0.8);
  VariationState vs;
  vs.tau = Vec(b.n);
  vs.rate = Vec(b.n);
  for (int k = 0; k < b.n; ++k) {
    vs.tau[k] = uniform(rng, -1.0, 1.0);
    vs.rate[k] = uniform(rng, -1.0, 1.0);
  }
  s.variations.push_back(vs);
  return s;
}

}  // namespace

TangentPoint random_tangent_point(const BundledSystem& sys, const Manifold& m,
                                  std::mt19937_64& rng, double v_lo, double v_hi) {
  const int n = sys.n;
  Vec x(n);
  for (int k = 0; k < n; ++k) {
    const double mid = 0.5 * (sys.x_lo[k] + sys.x_hi[k]);
    const double half = 0.25 * (sys.x_hi[k] - sys.x_lo[k]);
    x[k] = uniform(rng, mid - half, mid + half);
  }
  const Mat E = orthonormal_frame(m.metric_at(x).g);
  const double speed = uniform(rng, v_lo, v_hi);
  return {x, speed * (E * random_unit(rng, n))};
}

std::vector<Expr> projector_expressions(const Manifold& m) {
  const int n = m.dim();
  Expr speed2;
  bool first = true;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const Expr term = m.metric_expr(a, b) * velocity_var(n, a) * velocity_var(n, b);
      speed2 = first ? term : speed2 + term;
      first = false;
    }
  }
  const Expr speed = expr::apply(expr::Func::Sqrt, speed2);
  std::vector<Expr> N(n);
  for (int r = 0; r < n; ++r) N[r] = velocity_var(n, r) / speed;
  std::vector<Expr> P(n * n);
  for (int i = 0; i < n; ++i) {
    Expr Ni = m.metric_expr(i, 0) * N[0];
    for (int j = 1; j < n; ++j) Ni = Ni + m.metric_expr(i, j) * N[j];
    for (int r = 0; r < n; ++r) {
      P[r * n + i] = expr::simplify(Expr::constant(r == i ? 1.0 : 0.0) - N[r] * Ni);
    }
  }
  return P;
}

SuiteResult metric_compatibility_suite(const SelftestOptions& opt) {
  Suite suite("metric-compatibility", "geometry", 1e-10);
  std::mt19937_64 rng(opt.seed);
  for (const auto& b : bundled_systems()) {
    const Manifold m = Manifold::parse(b.n, b.metric, opt.geometry);
    for (std::size_t p = 0; p < opt.points; ++p) {
      try {
        const TangentPoint q = random_tangent_point(b, m, rng, 0.5, 2.0);
        const LocalGeometry geo = m.local(q.x, false);
        const int n = b.n;
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            for (int s = 0; s < n; ++s) {
              double d = geo.dg(i, j, s);
              for (int k = 0; k < n; ++k) {
                d -= geo.gamma(k, s, i) * geo.g(k, j) + geo.gamma(k, s, j) * geo.g(i, k);
              }
              worst = std::max(worst, std::fabs(d));
            }
          }
        }
        suite.observe(b.name, "nabla g = 0", worst);
        double sym = 0.0;
        for (int k = 0; k < n; ++k) {
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
              sym = std::max(sym, std::fabs(geo.gamma(k, i, j) - geo.gamma(k, j, i)));
            }
          }
        }
        suite.observe(b.name, "christoffel symmetry", sym);
      } catch (const Error& e) {
        suite.error(b.name, "evaluation", e);
      }
    }
  }
  return suite.result();
}

SuiteResult frame_identity_suite(const SelftestOptions& opt) {
  Suite suite("frame-identities", "geometry", 1e-12);
  std::mt19937_64 rng(opt.seed + 1);
  for (const auto& b : bundled_systems()) {
    const Manifold m = Manifold::parse(b.n, b.metric, opt.geometry);
    const int n = b.n;
    for (std::size_t p = 0; p < opt.points; ++p) {
      try {
        const TangentPoint q = random_tangent_point(b, m, rng, 0.5, 2.0);
        const MetricValue mv = m.metric_at(q.x);
        const Mat& g = mv.g;
        const FrameData f = make_frame(g, q.v);
        suite.observe(b.name, "g g^-1 = I", max_abs(g * mv.inverse - Mat::Identity(n, n)));
        suite.observe(b.name, "P^2 = P", max_abs(f.P * f.P - f.P));
        suite.observe(b.name, "tr P = n-1", std::fabs(f.P.trace() - (n - 1)));
        suite.observe(b.name, "P N = 0", max_abs(f.P * f.N));
        suite.observe(b.name, "N^r N_r = 1", std::fabs(f.N.dot(f.N_cov) - 1.0));
        suite.observe(b.name, "g P symmetric", max_abs(g * f.P - (g * f.P).transpose()));
      } catch (const Error& e) {
        suite.error(b.name, "evaluation", e);
      }
    }
  }
  return suite.result();
}

SuiteResult projector_gradient_suite(const SelftestOptions& opt) {
  Suite suite("projector-gradients", "geometry", 1e-8);
  std::mt19937_64 rng(opt.seed + 2);
  for (const auto& b : bundled_systems()) {
    const Manifold m = Manifold::parse(b.n, b.metric, opt.geometry);
    const int n = b.n;
    const auto P = projector_expressions(m);
    std::vector<Expr> dPdx(n * n * n), dPdv(n * n * n);  // (r, i, s)
    for (int r = 0; r < n; ++r) {
      for (int i = 0; i < n; ++i) {
        for (int s = 0; s < n; ++s) {
          dPdx[(r * n + i) * n + s] = expr::differentiate(P[r * n + i], "x" + std::to_string(s + 1));
          dPdv[(r * n + i) * n + s] = expr::differentiate(P[r * n + i], "v" + std::to_string(s + 1));
        }
      }
    }
    for (std::size_t p = 0; p < opt.points; ++p) {
      try {
        const TangentPoint q = random_tangent_point(b, m, rng, 0.5, 2.0);
        const auto vals = pack(q);
        const LocalGeometry geo = m.local(q.x, false);
        const FrameData f = make_frame(geo.g, q.v);
        Mat Pv(n, n);
        for (int r = 0; r < n; ++r) {
          for (int i = 0; i < n; ++i) Pv(r, i) = expr::evaluate(P[r * n + i], vals);
        }
        suite.observe(b.name, "symbolic P matches frame", max_abs(Pv - f.P));

        auto dv = [&](int r, int i, int s) { return expr::evaluate(dPdv[(r * n + i) * n + s], vals); };
        auto dx = [&](int r, int i, int s) { return expr::evaluate(dPdx[(r * n + i) * n + s], vals); };
        double vel_err = 0.0;
        double spat_err = 0.0;
        for (int r = 0; r < n; ++r) {
          for (int i = 0; i < n; ++i) {
            for (int s = 0; s < n; ++s) {
              double gPN = 0.0;
              for (int j = 0; j < n; ++j) gPN += geo.g(i, j) * f.P(j, s);
              const double expected = -(f.N_cov[i] * f.P(r, s) + gPN * f.N[r]) / f.speed;
              vel_err = std::max(vel_err, std::fabs(dv(r, i, s) - expected));

              double cov = dx(r, i, s);
              for (int j = 0; j < n; ++j) {
                for (int qq = 0; qq < n; ++qq) cov -= geo.gamma(j, s, qq) * q.v[qq] * dv(r, i, j);
                cov += geo.gamma(r, s, j) * f.P(j, i) - geo.gamma(j, s, i) * f.P(r, j);
              }
              spat_err = std::max(spat_err, std::fabs(cov));
            }
          }
        }
        suite.observe(b.name, "velocity gradient of P", vel_err);
        suite.observe(b.name, "spatial gradient of P vanishes", spat_err);
      } catch (const Error& e) {
        suite.error(b.name, "evaluation", e);
      }
    }
  }
  return suite.result();
}

SuiteResult curvature_suite(const SelftestOptions& opt) {
  Suite suite("curvature", "geometry", 1e-10);
  std::mt19937_64 rng(opt.seed + 3);
  for (const auto& b : bundled_systems()) {
    const Manifold m = Manifold::parse(b.n, b.metric, opt.geometry);
    const int n = b.n;
    const bool sphere = b.name.rfind("sphere", 0) == 0;
    for (std::size_t p = 0; p < opt.points; ++p) {
      try {
        const TangentPoint q = random_tangent_point(b, m, rng, 0.5, 2.0);
        const Tensor4 R = m.riemann_at(q.x);
        double anti = 0.0;
        double mag = 0.0;
        for (int k = 0; k < n; ++k) {
          for (int a = 0; a < n; ++a) {
            for (int s = 0; s < n; ++s) {
              for (int r = 0; r < n; ++r) {
                anti = std::max(anti, std::fabs(R(k, a, s, r) + R(k, a, r, s)));
                mag = std::max(mag, std::fabs(R(k, a, s, r)));
              }
            }
          }
        }
        suite.observe(b.name, "R antisymmetric in (s, r)", anti);
        if (sphere) {
          // unit sphere: R^1_{212} = K g_22 with K = 1
          const double s1 = std::sin(q.x[0]);
          suite.observe(b.name, "Gaussian curvature 1", std::fabs(R(0, 1, 0, 1) - s1 * s1));
        } else {
          suite.observe(b.name, "flat chart", mag);
        }
      } catch (const Error& e) {
        suite.error(b.name, "evaluation", e);
      }
    }
  }
  return suite.result();
}

SuiteResult rewrite_equivalence_suite(const SelftestOptions& opt) {
  Suite suite("rewrite-equivalence", "normality", 1e-12);
  std::mt19937_64 rng(opt.seed + 4);
  for (const auto& b : bundled_systems()) {
    const NewtonSystem sys = b.build(opt.geometry);
    for (std::size_t p = 0; p < opt.equivalence_points; ++p) {
      try {
        const TangentPoint q = random_tangent_point(b, sys.manifold, rng, 0.5, 2.0);
        const FieldAtPoint field = evaluate_field(sys.manifold, sys.force, q, false);
        const double speed = std::sqrt(q.v.dot(field.geo.g * q.v));
        const WeakResidual w = weak_residual(field, q.v);
        suite.observe(b.name, "first family raw = v R1",
                      max_abs(raw_first_residual(field, q.v) - speed * w.R1));
        suite.observe(b.name, "second family raw = v R2",
                      max_abs(raw_second_residual(field, q.v) - speed * w.R2));
      } catch (const Error& e) {
        suite.error(b.name, "evaluation", e);
      }
    }
  }
  return suite.result();
}

SuiteResult projection_annihilation_suite(const SelftestOptions& opt) {
  Suite suite("projection-annihilation", "normality", 1e-12);
  std::mt19937_64 rng(opt.seed + 5);
  for (const auto& b : bundled_systems()) {
    const NewtonSystem sys = b.build(opt.geometry);
    for (std::size_t p = 0; p < opt.points; ++p) {
      try {
        const TangentPoint q = random_tangent_point(b, sys.manifold, rng, 0.5, 2.0);
        const FieldAtPoint field = evaluate_field(sys.manifold, sys.force, q, false);
        const FrameData f = make_frame(field.geo.g, q.v);
        const WeakResidual w = weak_residual(field, q.v);
        const AdditionalResidual a = additional_residual(field, q.v);
        suite.observe(b.name, "R1 N = 0", std::fabs(w.R1.dot(f.N)));
        suite.observe(b.name, "R2 N = 0", std::fabs(w.R2.dot(f.N)));
        suite.observe(b.name, "A1 N = 0", std::max(max_abs(a.A1 * f.N), max_abs(a.A1.transpose() * f.N)));
        suite.observe(b.name, "A2 N = 0",
                      std::max(max_abs(a.A2 * f.N), max_abs(a.A2.transpose() * f.N_cov)));
      } catch (const Error& e) {
        suite.error(b.name, "evaluation", e);
      }
    }
  }
  return suite.result();
}

namespace {

// Shared driver for the φ̇ / φ̈ formula suites.
template <typename Compare>
void deviation_trajectories(const SelftestOptions& opt, std::uint64_t salt, Suite& suite,
                            const char* invariant, Compare compare) {
  std::mt19937_64 rng(opt.seed + salt);
  const double h = 1e-3;
  for (const auto& b : bundled_systems()) {
    const NewtonSystem sys = b.build(opt.geometry);
    for (std::size_t t = 0; t < opt.trajectories; ++t) {
      try {
        const FlowState init = random_flow(b, sys.manifold, rng);
        const TrajectoryRecord rec = integrate(sys, init, 1.0, h);
        if (!rec.ok()) throw Error("integration aborted: " + rec.abort->reason);
        const DeviationSeries ds = deviation_series(sys, rec, 0);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < ds.phi.size(); ++i) {
          worst = std::max(worst, compare(ds, i, h));
        }
        suite.observe(b.name, invariant, worst);
      } catch (const Error& e) {
        suite.error(b.name, invariant, e);
      }
    }
  }
}

}  // namespace

SuiteResult phi_dot_suite(const SelftestOptions& opt) {
  Suite suite("phi-dot-formula", "deviation", 1e-6);
  deviation_trajectories(opt, 6, suite, "phi_dot vs central difference",
                         [](const DeviationSeries& ds, std::size_t i, double h) {
                           const double fd = (ds.phi[i + 1] - ds.phi[i - 1]) / (2.0 * h);
                           return std::fabs(ds.phi_dot[i] - fd) /
                                  std::max(1.0, std::fabs(ds.phi_dot[i]));
                         });
  return suite.result();
}

SuiteResult phi_ddot_suite(const SelftestOptions& opt) {
  Suite suite("phi-ddot-formula", "deviation", 1e-4);
  deviation_trajectories(opt, 6, suite, "phi_ddot vs second difference",
                         [](const DeviationSeries& ds, std::size_t i, double h) {
                           const double fd =
                               (ds.phi[i + 1] - 2.0 * ds.phi[i] + ds.phi[i - 1]) / (h * h);
                           return std::fabs(ds.phi_ddot[i] - fd) /
                                  std::max(1.0, std::fabs(ds.phi_ddot[i]));
                         });
  return suite.result();
}

SuiteResult chain_rule_suite(const SelftestOptions& opt) {
  Suite suite("force-chain-rule", "dynamics", 1e-5);
  std::mt19937_64 rng(opt.seed + 7);
  for (const auto& b : bundled_systems()) {
    const NewtonSystem sys = b.build(opt.geometry);
    for (std::size_t t = 0; t < std::min<std::size_t>(opt.trajectories, 3); ++t) {
      try {
        FlowState init;
        init.q = random_tangent_point(b, sys.manifold, rng, 0.3, 0.8);
        const TrajectoryRecord rec = integrate(sys, init, 1.0, 1e-3);
        if (!rec.ok()) throw Error("integration aborted: " + rec.abort->reason);
        const auto rate = covariant_rate(sys.manifold, rec, rec.forces);
        double worst = 0.0;
        for (std::size_t i = 0; i < rec.size(); ++i) {
          const Vec chain = nabla_t_force(sys, rec.nodes[i].q);
          worst = std::max(worst, (chain - rate[i]).cwiseAbs().maxCoeff());
        }
        suite.observe(b.name, "nabla_t F chain rule vs trajectory", worst);
      } catch (const Error& e) {
        suite.error(b.name, "nabla_t F chain rule", e);
      }
    }
  }
  return suite.result();
}

double variation_fd_error(const NewtonSystem& sys, const Vec& x0, const Vec& v0,
                          double delta, double t_end, double step) {
  const int n = sys.dim();
  const Mat E = orthonormal_frame(sys.manifold.metric_at(x0).g);
  const Vec w = E.fullPivLu().solve(v0);  // orthonormal components of v0
  const double len = w.norm();
  if (!(len > 0.0)) throw ZeroVelocityError();
  // unit vector orthogonal to w
  Vec p = Vec::Zero(n);
  for (int k = 0; k < n && p.norm() < 1e-6; ++k) {
    p = Vec::Unit(n, k) - w.dot(Vec::Unit(n, k)) / (len * len) * w;
  }
  p /= p.norm();
  auto velocity = [&](double angle) {
    return Vec(E * (std::cos(angle) * w + std::sin(angle) * len * p));
  };

  FlowState centre;
  centre.q = {x0, v0};
  centre.variations.push_back({Vec::Zero(n), E * (len * p)});
  FlowState plus, minus;
  plus.q = {x0, velocity(delta)};
  minus.q = {x0, velocity(-delta)};

  const TrajectoryRecord rc = integrate(sys, centre, t_end, step);
  const TrajectoryRecord rp = integrate(sys, plus, t_end, step);
  const TrajectoryRecord rm = integrate(sys, minus, t_end, step);
  if (!rc.ok() || !rp.ok() || !rm.ok()) throw Error("integration aborted in variation check");
  double worst = 0.0;
  for (std::size_t i = 0; i < rc.size(); ++i) {
    const Vec fd = (rp.nodes[i].q.x - rm.nodes[i].q.x) / (2.0 * delta);
    worst = std::max(worst, (fd - rc.nodes[i].variations[0].tau).cwiseAbs().maxCoeff());
  }
  return worst;
}

SuiteResult variation_fidelity_suite(const SelftestOptions& opt) {
  // observed value is |ratio − 100| for the error ratio at δ = 1e-3 vs 1e-4
  Suite suite("variation-fidelity", "dynamics", 30.0);
  std::mt19937_64 rng(opt.seed + 8);
  for (const char* name : kFidelitySystems) {
    const BundledSystem& b = bundled_system(name);
    const NewtonSystem sys = b.build(opt.geometry);
    for (int t = 0; t < 3; ++t) {
      try {
        const TangentPoint q = random_tangent_point(b, sys.manifold, rng, 0.5, 0.8);
        const double coarse = variation_fd_error(sys, q.x, q.v, 1e-3, 1.0, 1e-3);
        const double fine = variation_fd_error(sys, q.x, q.v, 1e-4, 1.0, 1e-3);
        suite.observe(b.name, "error ratio 100 when delta shrinks 10x",
                      std::fabs(coarse / fine - 100.0));
      } catch (const Error& e) {
        suite.error(b.name, "variation fidelity", e);
      }
    }
  }
  return suite.result();
}

std::vector<SuiteResult> run_selftest(const SelftestOptions& opt) {
  return {
      metric_compatibility_suite(opt), frame_identity_suite(opt),
      projector_gradient_suite(opt),   curvature_suite(opt),
      rewrite_equivalence_suite(opt), projection_annihilation_suite(opt),
      phi_dot_suite(opt),              phi_ddot_suite(opt),
      chain_rule_suite(opt),           variation_fidelity_suite(opt),
  };
}

}  // namespace nshift
