#include "nshift/geometry.hpp"

#include <cmath>
#include <sstream>

#include "nshift/error.hpp"

namespace nshift {

using expr::Expr;

namespace {

// Values laid out as x1..xn, v1..vn for tangent-variable expressions.
std::vector<double> pack(const TangentPoint& q) {
  std::vector<double> values(static_cast<std::size_t>(q.x.size() + q.v.size()));
  for (Eigen::Index i = 0; i < q.x.size(); ++i) values[i] = q.x[i];
  for (Eigen::Index i = 0; i < q.v.size(); ++i) values[q.x.size() + i] = q.v[i];
  return values;
}

std::span<const double> span_of(const Vec& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

void check_dim(const Vec& x, int n, const char* what) {
  if (x.size() != n) {
    throw Error(std::string(what) + " has dimension " + std::to_string(x.size()) +
                ", expected " + std::to_string(n));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifold

Manifold::Manifold(int n, std::vector<std::vector<Expr>> metric,
                   GeometryOptions options)
    : n_(n), options_(options) {
  if (n < 2) throw GeometryError("dimension must be at least 2");
  if (static_cast<int>(metric.size()) != n) {
    throw GeometryError("metric must have " + std::to_string(n) + " rows");
  }
  const auto coords = expr::coordinate_variables(n);
  g_.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(metric[i].size()) != n) {
      throw GeometryError("metric row " + std::to_string(i) + " must have " +
                          std::to_string(n) + " entries");
    }
    for (int j = 0; j < n; ++j) g_[i * n + j] = expr::simplify(metric[i][j]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (expr::to_string(g_[i * n + j]) != expr::to_string(g_[j * n + i])) {
        throw GeometryError("metric is not symmetric: g[" + std::to_string(i) +
                            "][" + std::to_string(j) + "] differs from g[" +
                            std::to_string(j) + "][" + std::to_string(i) + "]");
      }
    }
  }
  constant_ = true;
  for (const auto& e : g_) constant_ = constant_ && !expr::depends_on_any(e);

  dg_.resize(static_cast<std::size_t>(n) * n * n);
  d2g_.resize(static_cast<std::size_t>(n) * n * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int s = 0; s < n; ++s) {
        Expr d = expr::differentiate(g_[i * n + j], coords[s]);
        dg_[(i * n + j) * n + s] = d;
        for (int t = 0; t < n; ++t) {
          d2g_[((i * n + j) * n + s) * n + t] = expr::differentiate(d, coords[t]);
        }
      }
    }
  }
}

Manifold Manifold::parse(int n, const std::vector<std::vector<std::string>>& metric,
                         GeometryOptions options) {
  if (static_cast<int>(metric.size()) != n) {
    throw ConfigError("metric: expected " + std::to_string(n) + " rows");
  }
  const auto coords = expr::coordinate_variables(n);
  std::vector<std::vector<Expr>> parsed(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(metric[i].size()) != n) {
      throw ConfigError("metric[" + std::to_string(i) + "]: expected " +
                        std::to_string(n) + " entries");
    }
    for (int j = 0; j < n; ++j) {
      try {
        parsed[i].push_back(expr::parse(metric[i][j], coords));
      } catch (const ParseError& e) {
        throw ConfigError("metric[" + std::to_string(i) + "][" + std::to_string(j) +
                          "]: " + e.what());
      }
    }
  }
  try {
    return Manifold(n, std::move(parsed), options);
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("metric: ") + e.what());
  }
}

Manifold Manifold::euclidean(int n) {
  std::vector<std::vector<Expr>> g(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g[i][j] = Expr::constant(i == j ? 1.0 : 0.0);
  }
  return Manifold(n, std::move(g));
}

Manifold Manifold::with_options(GeometryOptions options) const {
  Manifold copy = *this;
  copy.options_ = options;
  return copy;
}

MetricValue Manifold::metric_at(const Vec& x) const {
  check_dim(x, n_, "point");
  const auto values = span_of(x);
  Mat g(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = i; j < n_; ++j) {
      g(i, j) = expr::evaluate(g_[i * n_ + j], values);
      g(j, i) = g(i, j);
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > 1e-10)) {
    std::ostringstream os;
    os.precision(17);
    os << "metric is not positive definite at x = (" << x.transpose()
       << "): smallest eigenvalue " << smallest;
    throw GeometryError(os.str());
  }
  return {g, g.inverse()};
}

LocalGeometry Manifold::local(const Vec& x, bool with_curvature) const {
  LocalGeometry out;
  auto metric = metric_at(x);
  out.g = std::move(metric.g);
  out.g_inv = std::move(metric.inverse);
  out.dg = Tensor3(n_);
  out.gamma = Tensor3(n_);
  if (constant_) {
    if (with_curvature) out.riemann = Tensor4(n_);
    return out;
  }
  const auto values = span_of(x);
  const int n = n_;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      for (int s = 0; s < n; ++s) {
        const double d = expr::evaluate(dg_[(i * n + j) * n + s], values);
        out.dg(i, j, s) = d;
        out.dg(j, i, s) = d;
      }
    }
  }
  // Lowered connection Γ_{r,ij} = ½(∂_i g_rj + ∂_j g_ri − ∂_r g_ij).
  Tensor3 lowered(n);
  for (int r = 0; r < n; ++r) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        lowered(r, i, j) =
            0.5 * (out.dg(r, j, i) + out.dg(r, i, j) - out.dg(i, j, r));
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double sum = 0.0;
        for (int r = 0; r < n; ++r) sum += out.g_inv(k, r) * lowered(r, i, j);
        out.gamma(k, i, j) = sum;
      }
    }
  }
  if (!with_curvature) return out;

  // ∂_s g^{kr} = −g^{ka} ∂_s g_ab g^{br}
  Tensor3 dginv(n);  // (k, r, s)
  for (int s = 0; s < n; ++s) {
    Mat dgs(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) dgs(a, b) = out.dg(a, b, s);
    }
    Mat prod = -(out.g_inv * dgs * out.g_inv);
    for (int k = 0; k < n; ++k) {
      for (int r = 0; r < n; ++r) dginv(k, r, s) = prod(k, r);
    }
  }
  std::vector<double> d2(static_cast<std::size_t>(n) * n * n * n);
  for (std::size_t idx = 0; idx < d2.size(); ++idx) {
    d2[idx] = expr::evaluate(d2g_[idx], values);
  }
  auto second = [&](int i, int j, int s, int t) {
    return d2[((static_cast<std::size_t>(i) * n + j) * n + s) * n + t];
  };
  Tensor4 dgamma(n);  // (k, i, j, s) = ∂_s Γ^k_{ij}
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int s = 0; s < n; ++s) {
          double sum = 0.0;
          for (int r = 0; r < n; ++r) {
            const double dlow =
                0.5 * (second(r, j, i, s) + second(r, i, j, s) - second(i, j, r, s));
            sum += dginv(k, r, s) * lowered(r, i, j) + out.g_inv(k, r) * dlow;
          }
          dgamma(k, i, j, s) = sum;
        }
      }
    }
  }
  const double sign = options_.flip_riemann_sign ? -1.0 : 1.0;
  Tensor4 riemann(n);
  for (int k = 0; k < n; ++k) {
    for (int m = 0; m < n; ++m) {
      for (int s = 0; s < n; ++s) {
        for (int r = 0; r < n; ++r) {
          double value = dgamma(k, m, r, s) - dgamma(k, m, s, r);
          for (int j = 0; j < n; ++j) {
            value += out.gamma(k, s, j) * out.gamma(j, m, r) -
                     out.gamma(k, r, j) * out.gamma(j, m, s);
          }
          riemann(k, m, s, r) = sign * value;
        }
      }
    }
  }
  out.riemann = std::move(riemann);
  return out;
}

ChristoffelTensor Manifold::christoffel_at(const Vec& x) const {
  return local(x, false).gamma;
}

CurvatureTensor Manifold::riemann_at(const Vec& x) const {
  return *local(x, true).riemann;
}

FrameData make_frame(const Mat& g, const Vec& v) {
  const double speed2 = v.dot(g * v);
  const double speed = std::sqrt(speed2);
  if (!(speed > 0.0) || !std::isfinite(speed)) throw ZeroVelocityError();
  FrameData f;
  f.speed = speed;
  f.N = v / speed;
  f.N_cov = g * f.N;
  const auto n = v.size();
  f.P = Mat::Identity(n, n) - f.N * f.N_cov.transpose();
  return f;
}

FrameData Manifold::frame_at(const TangentPoint& q) const {
  check_dim(q.v, n_, "velocity");
  return make_frame(metric_at(q.x).g, q.v);
}

// ---------------------------------------------------------------------------
// ForceField

ForceField::ForceField(int n, std::vector<Expr> components)
    : n_(n), f_(std::move(components)) {
  if (static_cast<int>(f_.size()) != n) {
    throw GeometryError("force must have " + std::to_string(n) + " components");
  }
  const auto vars = expr::tangent_variables(n);
  dfdx_.resize(static_cast<std::size_t>(n) * n);
  dfdv_.resize(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    f_[k] = expr::simplify(f_[k]);
    for (int i = 0; i < n; ++i) {
      dfdx_[i * n + k] = expr::differentiate(f_[k], vars[i]);
      dfdv_[i * n + k] = expr::differentiate(f_[k], vars[n + i]);
    }
  }
}

ForceField ForceField::parse(int n, const std::vector<std::string>& components) {
  if (static_cast<int>(components.size()) != n) {
    throw ConfigError("force: expected " + std::to_string(n) + " components");
  }
  const auto vars = expr::tangent_variables(n);
  std::vector<Expr> parsed;
  for (int k = 0; k < n; ++k) {
    try {
      parsed.push_back(expr::parse(components[k], vars));
    } catch (const ParseError& e) {
      throw ConfigError("force[" + std::to_string(k) + "]: " + e.what());
    }
  }
  return ForceField(n, std::move(parsed));
}

ForceField ForceField::zero(int n) {
  return ForceField(n, std::vector<Expr>(n, Expr::constant(0.0)));
}

Vec ForceField::value_at(const TangentPoint& q) const {
  const auto values = pack(q);
  Vec F(n_);
  for (int k = 0; k < n_; ++k) F[k] = expr::evaluate(f_[k], values);
  return F;
}

ForceField::Jacobians ForceField::jacobians_at(const TangentPoint& q) const {
  const auto values = pack(q);
  Jacobians j{Vec(n_), Mat(n_, n_), Mat(n_, n_)};
  for (int k = 0; k < n_; ++k) {
    j.value[k] = expr::evaluate(f_[k], values);
    for (int i = 0; i < n_; ++i) {
      j.dx(i, k) = expr::evaluate(dfdx_[i * n_ + k], values);
      j.dv(i, k) = expr::evaluate(dfdv_[i * n_ + k], values);
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// Gradients

GradientPair gradients(const LocalGeometry& geo, const ForceField::Jacobians& jac,
                       const Vec& v) {
  const int n = static_cast<int>(v.size());
  GradientPair out{Mat(n, n), jac.dv};
  // ∇_i F^k = ∂F^k/∂x^i − Γ^j_{is} v^s ∂F^k/∂v^j + Γ^k_{is} F^s
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      double value = jac.dx(i, k);
      for (int s = 0; s < n; ++s) {
        for (int j = 0; j < n; ++j) {
          value -= geo.gamma(j, i, s) * v[s] * jac.dv(j, k);
        }
        value += geo.gamma(k, i, s) * jac.value[s];
      }
      out.spatial(i, k) = value;
    }
  }
  return out;
}

GradientPair gradients_at(const Manifold& m, const ForceField& f,
                          const TangentPoint& q) {
  return gradients(m.local(q.x, false), f.jacobians_at(q), q.v);
}

FieldAtPoint evaluate_field(const Manifold& m, const ForceField& f,
                            const TangentPoint& q, bool with_curvature) {
  FieldAtPoint out;
  out.geo = m.local(q.x, with_curvature);
  auto jac = f.jacobians_at(q);
  out.grad = gradients(out.geo, jac, q.v);
  out.F = std::move(jac.value);
  return out;
}

// ---------------------------------------------------------------------------
// Index gymnastics

Vec lower(const Mat& g, const Vec& vector) { return g * vector; }
Vec raise(const Mat& g_inv, const Vec& covector) { return g_inv * covector; }
double inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

Mat orthonormal_frame(const Mat& g) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    throw GeometryError("metric factorization failed (not positive definite)");
  }
  const Mat L = llt.matrixL();
  // E = L^{-T}: E^T g E = L^{-1} L L^T L^{-T} = I
  return L.transpose().triangularView<Eigen::Upper>().solve(
      Mat::Identity(g.rows(), g.cols()));
}

}  // namespace nshift
