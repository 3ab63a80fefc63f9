#include "nshift/deviation.hpp"

#include <algorithm>
#include <cmath>

#include "nshift/error.hpp"

namespace nshift {

double phi(const Mat& g, const Vec& v, const Vec& tau) { return inner(g, v, tau); }

double phi(const Manifold& m, const TangentPoint& q, const Vec& tau) {
  return phi(m.metric_at(q.x).g, q.v, tau);
}

double phi_dot(const NewtonSystem& sys, const TangentPoint& q,
               const VariationState& vs) {
  const Mat g = sys.manifold.metric_at(q.x).g;
  const Vec F = sys.force.value_at(q);
  return inner(g, F, vs.tau) + inner(g, q.v, vs.rate);
}

AlphaBeta alpha_beta(const FieldAtPoint& field, const Vec& v) {
  const Mat& g = field.geo.g;
  if (!(v.dot(g * v) > 0.0)) throw ZeroVelocityError();
  const Mat vel_low = field.grad.velocity * g;  // ∇̃_r F_s
  const Mat spat_low = field.grad.spatial * g;  // ∇_r F_s
  AlphaBeta ab;
  ab.alpha = 2.0 * (g * field.F) + vel_low * v;
  ab.beta = spat_low.transpose() * v + spat_low * v + vel_low.transpose() * field.F;
  return ab;
}

AlphaBeta alpha_beta(const NewtonSystem& sys, const TangentPoint& q) {
  return alpha_beta(evaluate_field(sys.manifold, sys.force, q, false), q.v);
}

double phi_ddot(const NewtonSystem& sys, const TangentPoint& q,
                const VariationState& vs) {
  const AlphaBeta ab = alpha_beta(sys, q);
  return ab.alpha.dot(vs.rate) + ab.beta.dot(vs.tau);
}

DeviationSeries deviation_series(const NewtonSystem& sys,
                                 const TrajectoryRecord& record,
                                 std::size_t variation) {
  DeviationSeries out;
  out.times = record.times;
  out.phi.reserve(record.size());
  out.phi_dot.reserve(record.size());
  out.phi_ddot.reserve(record.size());
  for (std::size_t i = 0; i < record.size(); ++i) {
    const auto& node = record.nodes[i];
    if (variation >= node.variations.size()) {
      throw Error("record has no variation " + std::to_string(variation));
    }
    const auto& vs = node.variations[variation];
    const FieldAtPoint field = evaluate_field(sys.manifold, sys.force, node.q, false);
    const Mat& g = field.geo.g;
    out.phi.push_back(inner(g, node.q.v, vs.tau));
    out.phi_dot.push_back(inner(g, field.F, vs.tau) + inner(g, node.q.v, vs.rate));
    const AlphaBeta ab = alpha_beta(field, node.q.v);
    out.phi_ddot.push_back(ab.alpha.dot(vs.rate) + ab.beta.dot(vs.tau));
  }
  return out;
}

std::vector<std::vector<InitialLimit>> initial_limits(
    const NewtonSystem& sys, const Vec& p0, double nu0,
    const std::vector<SphereSample>& directions, double step) {
  if (!(nu0 > 0.0)) throw Error("nu0 must be positive");
  std::vector<std::vector<InitialLimit>> out;
  out.reserve(directions.size());
  const int n = sys.dim();
  for (const auto& dir : directions) {
    FlowState init;
    init.q = {p0, nu0 * dir.direction};
    for (const auto& K : dir.tangents) {
      init.variations.push_back({Vec::Zero(n), nu0 * K});
    }
    const TrajectoryRecord rec = integrate(sys, init, 2.0 * step, step);
    if (!rec.ok()) throw Error("integration aborted: " + rec.abort->reason);

    const Mat g0 = sys.manifold.metric_at(p0).g;
    const FieldAtPoint field0 = evaluate_field(sys.manifold, sys.force, init.q, false);
    const AlphaBeta ab0 = alpha_beta(field0, init.q.v);

    std::vector<InitialLimit> limits;
    for (std::size_t a = 0; a < dir.tangents.size(); ++a) {
      const auto series = deviation_series(sys, rec, a);
      InitialLimit lim;
      const auto& vs0 = init.variations[a];
      lim.phi0 = inner(g0, init.q.v, vs0.tau);
      lim.phi_dot0 = inner(g0, field0.F, vs0.tau) + inner(g0, init.q.v, vs0.rate);
      lim.phi_ddot_limit = nu0 * ab0.alpha.dot(dir.tangents[a]);
      lim.phi_dddot_estimate =
          (4.0 * series.phi_ddot[1] - series.phi_ddot[2] - 3.0 * series.phi_ddot[0]) /
          (2.0 * step);
      limits.push_back(lim);
    }
    out.push_back(std::move(limits));
  }
  return out;
}

RankResult deviation_rank(const Manifold& m, const TrajectoryRecord& record,
                          double t0, double t1) {
  if (record.nodes.empty()) throw Error("empty record");
  const std::size_t k = record.nodes.front().variations.size();
  if (k < 4) throw Error("deviation_rank needs at least 4 variations");

  std::vector<std::size_t> window;
  const double slack = 1e-9 * record.step;
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (record.times[i] >= t0 - slack && record.times[i] <= t1 + slack) {
      window.push_back(i);
    }
  }
  if (window.size() < 8) throw Error("deviation_rank window needs at least 8 nodes");

  RankResult out;
  out.nodes = window.size();
  Mat samples(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(window.size()));
  for (std::size_t c = 0; c < window.size(); ++c) {
    const auto& node = record.nodes[window[c]];
    const Mat g = m.metric_at(node.q.x).g;
    for (std::size_t a = 0; a < k; ++a) {
      samples(a, c) = inner(g, node.q.v, node.variations[a].tau);
    }
  }

  std::vector<Eigen::Index> kept;
  for (Eigen::Index a = 0; a < samples.rows(); ++a) {
    const double peak = samples.row(a).cwiseAbs().maxCoeff();
    if (peak >= 1e-14) {
      samples.row(a) /= peak;
      kept.push_back(a);
    }
  }
  out.rows = kept.size();
  if (kept.empty()) {
    out.inconclusive = true;
    out.note = "all deviation functions below 1e-14 in the window";
    return out;
  }
  Mat rows(static_cast<Eigen::Index>(kept.size()), samples.cols());
  for (std::size_t r = 0; r < kept.size(); ++r) rows.row(r) = samples.row(kept[r]);

  Eigen::JacobiSVD<Mat> svd(rows);
  const Vec sv = svd.singularValues();
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  if (kept.size() < 3) {
    out.inconclusive = true;
    out.note = "fewer than 3 non-degenerate deviation functions";
    return out;
  }
  out.ratio = out.singular_values[2] / out.singular_values[0];
  return out;
}

}  // namespace nshift
