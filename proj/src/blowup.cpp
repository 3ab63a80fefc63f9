#include "nshift/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "nshift/error.hpp"
#include "nshift/format.hpp"

namespace nshift {

namespace {

constexpr double kUndefinedTau = 1e-12;

// Hyperspherical unit vector and its angle derivatives. Angles θ_0..θ_{n-2};
// the last one is the azimuth.
//   s_k = (Π_{b<k} sin θ_b) cos θ_k  for k ≤ n−2,   s_{n−1} = Π_{b≤n−2} sin θ_b
struct Hyper {
  Vec s;
  std::vector<Vec> ds;
};

Hyper hyperspherical(const Vec& theta) {
  const int m = static_cast<int>(theta.size());
  const int n = m + 1;
  Hyper h;
  h.s = Vec::Zero(n);
  h.ds.assign(m, Vec::Zero(n));
  // component k: factors sin θ_b (b < k) and, for k < m, cos θ_k
  auto component = [&](int k, int diff) {
    double prod = 1.0;
    bool touched = diff < 0;
    for (int b = 0; b < std::min(k, m); ++b) {
      if (b == diff) {
        prod *= std::cos(theta[b]);
        touched = true;
      } else {
        prod *= std::sin(theta[b]);
      }
    }
    if (k < m) {
      if (k == diff) {
        prod *= -std::sin(theta[k]);
        touched = true;
      } else {
        prod *= std::cos(theta[k]);
      }
    }
    return touched ? prod : 0.0;
  };
  for (int k = 0; k < n; ++k) {
    h.s[k] = component(k, -1);
    for (int a = 0; a < m; ++a) h.ds[a][k] = component(k, a);
  }
  return h;
}

std::vector<double> to_values(const Vec& u) { return {u.data(), u.data() + u.size()}; }

std::vector<expr::Expr> parameter_derivatives(const expr::Expr& e, int count) {
  std::vector<expr::Expr> out;
  for (int a = 0; a < count; ++a) out.push_back(expr::differentiate(e, "u" + std::to_string(a + 1)));
  return out;
}

double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void run_tracks(const NewtonSystem& sys, FrontRecord& rec,
                std::vector<FlowState> inits, double t_end, double step) {
  for (std::size_t d = 0; d < rec.tracks.size(); ++d) {
    rec.tracks[d].record = integrate(sys, inits[d], t_end, step);
    if (!rec.tracks[d].record.ok()) {
      rec.abort = TrackAbort{d, rec.tracks[d].record.abort->reason};
      rec.tracks.resize(d + 1);
      return;
    }
  }
}

// Cell-centred grid over the parameter box; the first parameter varies slowest.
std::vector<Vec> parameter_grid(const Vec& lo, const Vec& hi, int resolution) {
  const int m = static_cast<int>(lo.size());
  std::size_t total = 1;
  for (int a = 0; a < m; ++a) total *= static_cast<std::size_t>(resolution);
  std::vector<Vec> out;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec u(m);
    std::size_t rest = idx;
    for (int a = m - 1; a >= 0; --a) {
      const std::size_t j = rest % resolution;
      rest /= resolution;
      u[a] = lo[a] + (static_cast<double>(j) + 0.5) * (hi[a] - lo[a]) / resolution;
    }
    out.push_back(u);
  }
  return out;
}

}  // namespace

std::vector<SphereSample> sphere_grid(const Manifold& m, const Vec& p0, int resolution) {
  if (resolution < 8) throw Error("sphere grid resolution must be at least 8");
  const int n = m.dim();
  if (p0.size() != n) throw Error("p0 dimension does not match the manifold");
  const Mat E = orthonormal_frame(m.metric_at(p0).g);

  std::vector<Vec> params;
  if (n == 2) {
    for (int j = 0; j < resolution; ++j) {
      Vec u(1);
      u[0] = 2.0 * std::numbers::pi * j / resolution;
      params.push_back(u);
    }
  } else {
    const int polar_nodes = resolution / 2;
    const double delta = std::numbers::pi / (4.0 * resolution);
    const int polar = n - 2;
    std::size_t total = static_cast<std::size_t>(resolution);
    for (int a = 0; a < polar; ++a) total *= static_cast<std::size_t>(polar_nodes);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Vec u(n - 1);
      std::size_t rest = idx;
      u[n - 2] = 2.0 * std::numbers::pi * static_cast<double>(rest % resolution) / resolution;
      rest /= resolution;
      for (int a = polar - 1; a >= 0; --a) {
        const std::size_t j = rest % polar_nodes;
        rest /= polar_nodes;
        u[a] = delta + (std::numbers::pi - 2.0 * delta) * static_cast<double>(j) /
                           static_cast<double>(polar_nodes - 1);
      }
      params.push_back(u);
    }
  }

  std::vector<SphereSample> out;
  out.reserve(params.size());
  for (const auto& u : params) {
    const Hyper h = hyperspherical(u);
    SphereSample s;
    s.u = u;
    s.direction = E * h.s;
    for (const auto& d : h.ds) s.tangents.push_back(E * d);
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t FrontRecord::common_nodes() const {
  if (tracks.empty()) return 0;
  std::size_t c = tracks.front().record.size();
  for (const auto& t : tracks) c = std::min(c, t.record.size());
  return c;
}

std::vector<std::size_t> FrontRecord::output_nodes() const {
  std::vector<std::size_t> out;
  const std::size_t c = common_nodes();
  const std::size_t every = static_cast<std::size_t>(std::max(1, output_every));
  for (std::size_t i = 0; i < c; i += every) out.push_back(i);
  return out;
}

FrontRecord simulate_blowup(const NewtonSystem& sys, const BlowupConfig& cfg) {
  const int n = sys.dim();
  if (!cfg.nu && !(cfg.nu0 > 0.0)) throw Error("nu0 must be positive");
  if (cfg.output_every < 1) throw Error("output_every must be at least 1");
  const auto grid = sphere_grid(sys.manifold, cfg.p0, cfg.resolution);

  std::vector<expr::Expr> dnu;
  if (cfg.nu) dnu = parameter_derivatives(*cfg.nu, n - 1);

  FrontRecord rec{sys.manifold, {}, cfg.output_every, std::nullopt};
  std::vector<FlowState> inits;
  for (std::size_t d = 0; d < grid.size(); ++d) {
    const auto& s = grid[d];
    const auto uv = to_values(s.u);
    const double nu = cfg.nu ? expr::evaluate(*cfg.nu, uv) : cfg.nu0;
    if (!(nu > 0.0)) {
      throw Error("nu must be positive (direction " + std::to_string(d) + ")");
    }
    DirectionTrack track;
    track.u = s.u;
    track.direction = s.direction;
    track.nu = nu;
    FlowState init;
    init.q = {cfg.p0, nu * s.direction};
    for (int a = 0; a < n - 1; ++a) {
      const double dn = cfg.nu ? expr::evaluate(dnu[a], uv) : 0.0;
      // ∂(ν n)/∂u^a; at τ = 0 plain and covariant rates agree
      init.variations.push_back({Vec::Zero(n), dn * s.direction + nu * s.tangents[a]});
      track.expected_slope.push_back(nu * dn);
    }
    rec.tracks.push_back(std::move(track));
    inits.push_back(std::move(init));
  }
  run_tracks(sys, rec, std::move(inits), cfg.t_end, cfg.step);
  return rec;
}

Vec surface_normal(const Manifold& m, const Vec& x, const std::vector<Vec>& tangents,
                   bool flip) {
  const int n = m.dim();
  if (static_cast<int>(tangents.size()) != n - 1) {
    throw GeometryError("hypersurface needs n-1 tangents");
  }
  Mat T(n, n - 1);
  for (int a = 0; a < n - 1; ++a) T.col(a) = tangents[a];
  Eigen::JacobiSVD<Mat> svd(T);
  const Vec sv = svd.singularValues();
  if (!(sv[sv.size() - 1] > 1e-10 * std::max(1.0, sv[0]))) {
    throw GeometryError("degenerate hypersurface Jacobian");
  }
  // ω_i = det[T_1 .. T_{n-1}, e_i]
  Vec omega(n);
  for (int i = 0; i < n; ++i) {
    Mat A(n, n);
    A.leftCols(n - 1) = T;
    A.col(n - 1) = Vec::Unit(n, i);
    omega[i] = A.determinant();
  }
  const MetricValue mv = m.metric_at(x);
  Vec nvec = mv.inverse * omega;
  const double len = std::sqrt(nvec.dot(mv.g * nvec));
  nvec /= len;
  return flip ? Vec(-nvec) : nvec;
}

std::vector<SurfaceNode> surface_nodes(const Manifold& m, const HypersurfaceSpec& hs) {
  const int n = m.dim();
  if (static_cast<int>(hs.map.size()) != n) throw Error("surface map needs n components");
  if (hs.u_lo.size() != n - 1 || hs.u_hi.size() != n - 1) {
    throw Error("surface parameter box needs n-1 entries");
  }
  if (hs.resolution < 1) throw Error("surface resolution must be at least 1");

  std::vector<std::vector<expr::Expr>> dmap(n);
  for (int k = 0; k < n; ++k) dmap[k] = parameter_derivatives(hs.map[k], n - 1);

  std::vector<SurfaceNode> out;
  const auto grid = parameter_grid(hs.u_lo, hs.u_hi, hs.resolution);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto uv = to_values(grid[j]);
    SurfaceNode node;
    node.u = grid[j];
    node.x = Vec(n);
    for (int k = 0; k < n; ++k) node.x[k] = expr::evaluate(hs.map[k], uv);
    for (int a = 0; a < n - 1; ++a) {
      Vec t(n);
      for (int k = 0; k < n; ++k) t[k] = expr::evaluate(dmap[k][a], uv);
      node.tangents.push_back(t);
    }
    try {
      node.normal = surface_normal(m, node.x, node.tangents, hs.flip_normal);
    } catch (const GeometryError& e) {
      throw GeometryError(std::string(e.what()) + " at surface node " + std::to_string(j));
    }
    out.push_back(std::move(node));
  }
  return out;
}

FrontRecord simulate_shift(const NewtonSystem& sys, const ShiftConfig& cfg) {
  const int n = sys.dim();
  const auto& hs = cfg.surface;
  if (cfg.output_every < 1) throw Error("output_every must be at least 1");
  const auto nodes = surface_nodes(sys.manifold, hs);
  const auto dnu = parameter_derivatives(hs.nu, n - 1);

  std::vector<std::vector<expr::Expr>> dmap(n);
  for (int k = 0; k < n; ++k) dmap[k] = parameter_derivatives(hs.map[k], n - 1);

  // ν(u) n(u) off the grid, for differencing
  auto velocity_field = [&](const Vec& u) {
    const auto uv = to_values(u);
    Vec x(n);
    for (int k = 0; k < n; ++k) x[k] = expr::evaluate(hs.map[k], uv);
    std::vector<Vec> tangents;
    for (int a = 0; a < n - 1; ++a) {
      Vec t(n);
      for (int k = 0; k < n; ++k) t[k] = expr::evaluate(dmap[k][a], uv);
      tangents.push_back(t);
    }
    return Vec(expr::evaluate(hs.nu, uv) * surface_normal(sys.manifold, x, tangents, hs.flip_normal));
  };

  FrontRecord rec{sys.manifold, {}, cfg.output_every, std::nullopt};
  std::vector<FlowState> inits;
  const double h = 1e-3;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const auto& node = nodes[j];
    const auto uv = to_values(node.u);
    const double nu = expr::evaluate(hs.nu, uv);
    if (!(nu > 0.0)) throw Error("nu must be positive (surface node " + std::to_string(j) + ")");
    DirectionTrack track;
    track.u = node.u;
    track.direction = node.normal;
    track.nu = nu;
    FlowState init;
    init.q = {node.x, nu * node.normal};
    const Mat g = sys.manifold.metric_at(node.x).g;
    const Vec F = sys.force.value_at(init.q);
    const Tensor3 gamma = sys.manifold.christoffel_at(node.x);
    for (int a = 0; a < n - 1; ++a) {
      auto at = [&](double off) {
        Vec u = node.u;
        u[a] += off;
        return velocity_field(u);
      };
      const Vec dv = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
      // ∇_u v = ∂v/∂u + Γ(v, ∂x/∂u)
      Vec rate = dv;
      for (int k = 0; k < n; ++k) {
        for (int r = 0; r < n; ++r) {
          for (int s = 0; s < n; ++s) rate[k] += gamma(k, r, s) * init.q.v[r] * node.tangents[a][s];
        }
      }
      init.variations.push_back({node.tangents[a], rate});
      track.expected_slope.push_back(nu * expr::evaluate(dnu[a], uv) +
                                     inner(g, F, node.tangents[a]));
    }
    rec.tracks.push_back(std::move(track));
    inits.push_back(std::move(init));
  }
  run_tracks(sys, rec, std::move(inits), cfg.t_end, cfg.step);
  return rec;
}

FrontSample front_at_node(const FrontRecord& rec, std::size_t node) {
  if (node >= rec.common_nodes()) throw Error("front node out of range");
  FrontSample fs;
  fs.t = rec.tracks.front().record.times[node];
  for (const auto& track : rec.tracks) {
    const FlowState& s = track.record.nodes[node];
    const Mat g = rec.manifold.metric_at(s.q.x).g;
    const double speed = std::sqrt(s.q.v.dot(g * s.q.v));
    std::vector<double> phi, psi;
    for (const auto& vs : s.variations) {
      const double p = inner(g, s.q.v, vs.tau);
      const double tau_len = std::sqrt(vs.tau.dot(g * vs.tau));
      phi.push_back(p);
      psi.push_back(tau_len > kUndefinedTau && speed > 0.0 ? p / (speed * tau_len) : NAN);
    }
    fs.points.push_back(s.q.x);
    fs.velocities.push_back(s.q.v);
    fs.variations.push_back(s.variations);
    fs.phi.push_back(std::move(phi));
    fs.psi.push_back(std::move(psi));
  }
  return fs;
}

FrontSample front_at(const FrontRecord& rec, double t) {
  if (rec.tracks.empty()) throw Error("empty front record");
  const double step = rec.tracks.front().record.step;
  const double k = t / step;
  const double idx = std::round(k);
  if (idx < 0 || std::fabs(k - idx) > 1e-9 * std::max(1.0, k)) {
    throw Error("t is not on the output grid");
  }
  const auto node = static_cast<std::size_t>(idx);
  if (node % static_cast<std::size_t>(rec.output_every) != 0 || node >= rec.common_nodes()) {
    throw Error("t is not on the output grid");
  }
  return front_at_node(rec, node);
}

std::string front_csv_header(int n) {
  std::string h = "t,dir_index";
  for (int a = 1; a < n; ++a) h += ",u" + std::to_string(a);
  for (int k = 1; k <= n; ++k) h += ",x" + std::to_string(k);
  for (int k = 1; k <= n; ++k) h += ",v" + std::to_string(k);
  for (int a = 1; a < n; ++a) {
    for (int k = 1; k <= n; ++k) h += ",tau" + std::to_string(a) + "_" + std::to_string(k);
  }
  for (int a = 1; a < n; ++a) h += ",phi_" + std::to_string(a);
  for (int a = 1; a < n; ++a) h += ",psi_" + std::to_string(a);
  return h;
}

void export_front(const FrontRecord& rec, std::ostream& out) {
  const int n = rec.dim();
  out << front_csv_header(n) << '\n';
  for (std::size_t node : rec.output_nodes()) {
    const FrontSample fs = front_at_node(rec, node);
    for (std::size_t d = 0; d < rec.tracks.size(); ++d) {
      std::string row = format_double(fs.t) + "," + std::to_string(d);
      for (int a = 0; a < n - 1; ++a) row += "," + format_double(rec.tracks[d].u[a]);
      for (int k = 0; k < n; ++k) row += "," + format_double(fs.points[d][k]);
      for (int k = 0; k < n; ++k) row += "," + format_double(fs.velocities[d][k]);
      for (int a = 0; a < n - 1; ++a) {
        for (int k = 0; k < n; ++k) row += "," + format_double(fs.variations[d][a].tau[k]);
      }
      for (int a = 0; a < n - 1; ++a) row += "," + format_double(fs.phi[d][a]);
      for (int a = 0; a < n - 1; ++a) row += "," + format_double(fs.psi[d][a]);
      out << row << '\n';
    }
  }
}

SlopeReport slope_report(const FrontRecord& rec) {
  SlopeReport sr;
  if (rec.common_nodes() < 3) return sr;
  for (const auto& track : rec.tracks) {
    const double h = track.record.step;
    const FlowState& s1 = track.record.nodes[1];
    const FlowState& s2 = track.record.nodes[2];
    const Mat g1 = rec.manifold.metric_at(s1.q.x).g;
    const Mat g2 = rec.manifold.metric_at(s2.q.x).g;
    std::vector<double> measured;
    for (std::size_t a = 0; a < s1.variations.size(); ++a) {
      const double p1 = inner(g1, s1.q.v, s1.variations[a].tau);
      const double p2 = inner(g2, s2.q.v, s2.variations[a].tau);
      const double m = 2.0 * p1 / h - p2 / (2.0 * h);
      measured.push_back(m);
      sr.max_error = std::max(sr.max_error, std::fabs(m - track.expected_slope[a]));
    }
    sr.u.push_back(track.u);
    sr.measured.push_back(std::move(measured));
    sr.expected.push_back(track.expected_slope);
  }
  return sr;
}

OrthogonalityReport orthogonality_report(const FrontRecord& rec) {
  if (rec.tracks.empty() || rec.common_nodes() == 0) throw Error("empty front record");
  OrthogonalityReport rep;
  double sum = 0.0;
  for (std::size_t node : rec.output_nodes()) {
    const FrontSample fs = front_at_node(rec, node);
    double mx = 0.0;
    double s = 0.0;
    std::size_t cnt = 0;
    for (const auto& row : fs.psi) {
      for (double p : row) {
        if (std::isnan(p)) {
          ++rep.undefined;
          continue;
        }
        mx = std::max(mx, std::fabs(p));
        s += std::fabs(p);
        ++cnt;
      }
    }
    rep.times.push_back(fs.t);
    rep.max_abs_psi.push_back(cnt ? mx : NAN);
    rep.mean_abs_psi.push_back(cnt ? s / static_cast<double>(cnt) : NAN);
    rep.defined += cnt;
    sum += s;
    if (cnt) rep.max_abs = std::max(rep.max_abs, mx);
  }
  rep.inconclusive = rep.defined == 0;
  rep.mean_abs = rep.defined ? sum / static_cast<double>(rep.defined) : NAN;
  if (rep.inconclusive) rep.max_abs = NAN;
  rep.slope = slope_report(rec);
  return rep;
}

std::vector<TaylorDirection> taylor_check(const FrontRecord& rec) {
  if (rec.common_nodes() < 5) throw Error("taylor check needs nodes at h, 2h and 4h");
  std::vector<TaylorDirection> out;
  const std::size_t at[3] = {1, 2, 4};
  auto ratio = [](const double* r, double& rat, double& order) {
    if (r[0] == 0.0 || r[1] == 0.0) {
      rat = NAN;
      order = NAN;
      return;
    }
    rat = r[1] / r[0];
    order = std::log2(rat);
  };
  for (const auto& track : rec.tracks) {
    const auto& rec0 = track.record;
    const FlowState& s0 = rec0.nodes[0];
    const Tensor3 gamma0 = rec.manifold.christoffel_at(s0.q.x);
    std::vector<Vec> plain_rate;
    for (const auto& vs : s0.variations) {
      plain_rate.push_back(plain_from_covariant(gamma0, s0.q.v, vs.tau, vs.rate));
    }
    TaylorDirection td;
    for (int j = 0; j < 3; ++j) {
      const FlowState& s = rec0.nodes[at[j]];
      const double t = rec0.times[at[j]];
      td.x_rem[j] = max_abs(s.q.x - s0.q.x - t * s0.q.v);
      td.v_rem[j] = max_abs(s.q.v - s0.q.v);
      double worst = 0.0;
      for (std::size_t a = 0; a < s.variations.size(); ++a) {
        const Vec pred = s0.variations[a].tau + t * plain_rate[a];
        worst = std::max(worst, max_abs(s.variations[a].tau - pred));
      }
      td.tau_rem[j] = worst;
    }
    ratio(td.x_rem, td.x_ratio, td.x_order);
    ratio(td.v_rem, td.v_ratio, td.v_order);
    ratio(td.tau_rem, td.tau_ratio, td.tau_order);
    out.push_back(td);
  }
  return out;
}

}  // namespace nshift
