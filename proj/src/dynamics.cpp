#include "nshift/dynamics.hpp"

#include <cmath>

#include "nshift/error.hpp"
#include "nshift/kernels.hpp"

namespace nshift {

namespace {

// Γ^k_{rs} a^r b^s
Vec contract_gamma(const Tensor3& gamma, const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  Vec out = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (int r = 0; r < n; ++r) {
      for (int s = 0; s < n; ++s) sum += gamma(k, r, s) * a[r] * b[s];
    }
    out[k] = sum;
  }
  return out;
}

class PackedState {
 public:
  PackedState(int n, std::size_t variations)
      : n_(n), k_(variations), data_(2 * n + 4 * n * variations, 0.0) {}

  std::size_t size() const { return data_.size(); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void store(const FlowState& s) {
    put(0, s.q.x);
    put(n_, s.q.v);
    for (std::size_t a = 0; a < k_; ++a) {
      put(offset(a), s.variations[a].tau);
      put(offset(a) + n_, s.variations[a].rate);
    }
  }

  FlowState load() const {
    FlowState s;
    s.q.x = get(0);
    s.q.v = get(n_);
    s.variations.resize(k_);
    for (std::size_t a = 0; a < k_; ++a) {
      s.variations[a].tau = get(offset(a));
      s.variations[a].rate = get(offset(a) + n_);
    }
    return s;
  }

  static void write(std::vector<double>& dst, std::size_t at, const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) dst[at + i] = v[i];
  }

  std::size_t offset(std::size_t a) const { return 2 * n_ + 2 * n_ * a; }

  bool finite() const {
    for (double d : data_) {
      if (!std::isfinite(d)) return false;
    }
    return true;
  }

 private:
  void put(std::size_t at, const Vec& v) { write(data_, at, v); }
  Vec get(std::size_t at) const {
    Vec v(n_);
    for (int i = 0; i < n_; ++i) v[i] = data_[at + i];
    return v;
  }

  int n_;
  std::size_t k_;
  std::vector<double> data_;
};

// Plain-component right-hand side of the joint (x, v, τ, ∇ₜτ) system.
void joint_rhs(const NewtonSystem& sys, const PackedState& layout,
               const std::vector<double>& in, std::vector<double>& out) {
  PackedState tmp = layout;
  tmp.data() = in;
  const FlowState s = tmp.load();
  const bool curvature = !s.variations.empty();
  const FieldAtPoint field =
      evaluate_field(sys.manifold, sys.force, s.q, curvature);
  const Vec& v = s.q.v;

  PackedState::write(out, 0, v);
  PackedState::write(out, v.size(), field.F - contract_gamma(field.geo.gamma, v, v));
  for (std::size_t a = 0; a < s.variations.size(); ++a) {
    const auto& vs = s.variations[a];
    const VariationRates cov = variation_rhs(field, v, vs);
    const std::size_t at = layout.offset(a);
    PackedState::write(out, at, plain_from_covariant(field.geo.gamma, v, vs.tau, cov.dtau));
    PackedState::write(out, at + v.size(),
                       plain_from_covariant(field.geo.gamma, v, vs.rate, cov.drate));
  }
}

}  // namespace

Vec plain_from_covariant(const Tensor3& gamma, const Vec& v, const Vec& w,
                         const Vec& covariant) {
  return covariant - contract_gamma(gamma, v, w);
}

NewtonRates newton_rhs(const NewtonSystem& sys, const TangentPoint& q) {
  const auto geo = sys.manifold.local(q.x, false);
  const Vec F = sys.force.value_at(q);
  return {q.v, F - contract_gamma(geo.gamma, q.v, q.v)};
}

VariationRates variation_rhs(const FieldAtPoint& field, const Vec& v,
                             const VariationState& vs) {
  const int n = static_cast<int>(v.size());
  Vec acc = Vec::Zero(n);
  const auto& R = *field.geo.riemann;
  for (int k = 0; k < n; ++k) {
    double value = 0.0;
    for (int m = 0; m < n; ++m) {
      for (int s = 0; s < n; ++s) {
        for (int r = 0; r < n; ++r) {
          value -= R(k, m, s, r) * vs.tau[s] * v[r] * v[m];
        }
      }
    }
    for (int s = 0; s < n; ++s) {
      value += vs.rate[s] * field.grad.velocity(s, k);
      value += vs.tau[s] * field.grad.spatial(s, k);
    }
    acc[k] = value;
  }
  return {vs.rate, acc};
}

VariationRates variation_rhs(const NewtonSystem& sys, const TangentPoint& q,
                             const VariationState& vs) {
  return variation_rhs(evaluate_field(sys.manifold, sys.force, q, true), q.v, vs);
}

std::size_t step_count(double t_end, double step) {
  if (!(step > 0.0)) throw Error("integration step must be positive");
  if (!(t_end >= 0.0)) throw Error("t_end must be non-negative");
  const double ratio = t_end / step;
  const double rounded = std::round(ratio);
  if (std::fabs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw Error("t_end must be an integer multiple of the step");
  }
  return static_cast<std::size_t>(rounded);
}

TrajectoryRecord integrate(const NewtonSystem& sys, const FlowState& init,
                           double t_end, double step) {
  const int n = sys.dim();
  if (init.q.x.size() != n || init.q.v.size() != n) {
    throw Error("initial state dimension does not match the system");
  }
  for (const auto& vs : init.variations) {
    if (vs.tau.size() != n || vs.rate.size() != n) {
      throw Error("variation dimension does not match the system");
    }
  }
  const std::size_t steps = step_count(t_end, step);

  TrajectoryRecord rec;
  rec.step = step;
  rec.times.reserve(steps + 1);
  rec.nodes.reserve(steps + 1);
  rec.forces.reserve(steps + 1);

  PackedState state(n, init.variations.size());
  state.store(init);
  const std::size_t len = state.size();
  std::vector<double> k1(len), k2(len), k3(len), k4(len), stage(len), next(len);

  auto record_node = [&](std::size_t i) {
    FlowState s = state.load();
    rec.forces.push_back(sys.force.value_at(s.q));
    rec.nodes.push_back(std::move(s));
    rec.times.push_back(static_cast<double>(i) * step);
  };

  try {
    record_node(0);
  } catch (const Error& e) {
    rec.nodes.clear();
    rec.forces.clear();
    rec.times.clear();
    rec.abort = IntegrationAbort{0, e.what()};
    return rec;
  }

  const double half = 0.5 * step;
  const double sixth = step / 6.0;
  for (std::size_t i = 0; i < steps; ++i) {
    try {
      const auto& y = state.data();
      joint_rhs(sys, state, y, k1);
      kernels::axpy(stage, y, half, k1);
      joint_rhs(sys, state, stage, k2);
      kernels::axpy(stage, y, half, k2);
      joint_rhs(sys, state, stage, k3);
      kernels::axpy(stage, y, step, k3);
      joint_rhs(sys, state, stage, k4);
      kernels::rk4_combine(next, y, sixth, k1, k2, k3, k4);
      std::swap(state.data(), next);
      if (!state.finite()) {
        rec.abort = IntegrationAbort{i, "non-finite state after step " +
                                            std::to_string(i + 1)};
        return rec;
      }
      record_node(i + 1);
    } catch (const Error& e) {
      rec.abort = IntegrationAbort{rec.nodes.size() - 1, e.what()};
      return rec;
    }
  }
  return rec;
}

std::vector<Vec> covariant_rate(const Manifold& m, const TrajectoryRecord& record,
                                const std::vector<Vec>& series) {
  const std::size_t count = record.size();
  if (count < 3) throw Error("covariant_rate needs at least 3 nodes");
  if (series.size() != count) throw Error("series is not aligned with the record");
  const double h = record.step;
  std::vector<Vec> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec d;
    if (i == 0) {
      d = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * h);
    } else if (i + 1 == count) {
      d = (3.0 * series[i] - 4.0 * series[i - 1] + series[i - 2]) / (2.0 * h);
    } else {
      d = (series[i + 1] - series[i - 1]) / (2.0 * h);
    }
    const auto& q = record.nodes[i].q;
    out[i] = d + contract_gamma(m.christoffel_at(q.x), q.v, series[i]);
  }
  return out;
}

Vec nabla_t_force(const NewtonSystem& sys, const TangentPoint& q) {
  const FieldAtPoint field = evaluate_field(sys.manifold, sys.force, q, false);
  const int n = sys.dim();
  Vec out = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    for (int s = 0; s < n; ++s) {
      out[k] += field.grad.spatial(s, k) * q.v[s] + field.grad.velocity(s, k) * field.F[s];
    }
  }
  return out;
}

}  // namespace nshift
