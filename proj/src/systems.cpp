#include "nshift/systems.hpp"

#include "nshift/error.hpp"

namespace nshift {

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<std::vector<std::string>> identity_metric(int n) {
  std::vector<std::vector<std::string>> g(n, std::vector<std::string>(n, "0"));
  for (int i = 0; i < n; ++i) g[i][i] = "1";
  return g;
}

std::vector<BundledSystem> make_systems() {
  const auto e2 = identity_metric(2);
  const auto e3 = identity_metric(3);
  const std::vector<std::vector<std::string>> polar = {{"1", "0"}, {"0", "x1^2"}};
  const std::vector<std::vector<std::string>> sphere = {{"1", "0"}, {"0", "sin(x1)^2"}};
  const Vec box2_lo = vec({-2, -2});
  const Vec box2_hi = vec({2, 2});
  const Vec box3_lo = vec({-2, -2, -2});
  const Vec box3_hi = vec({2, 2, 2});

  return {
      {"euclid2-zero", 2, e2, {"0", "0"}, box2_lo, box2_hi, true},
      {"euclid2-linear-drag", 2, e2, {"0.5*v1", "0.5*v2"}, box2_lo, box2_hi, true},
      {"euclid2-speed-drag", 2, e2,
       {"-0.3*v1*sqrt(v1^2+v2^2)", "-0.3*v2*sqrt(v1^2+v2^2)"}, box2_lo, box2_hi, true},
      {"euclid2-constant", 2, e2, {"1", "0"}, box2_lo, box2_hi, false},
      {"euclid2-harmonic", 2, e2, {"-x1", "-x2"}, box2_lo, box2_hi, false},
      {"polar-central", 2, polar, {"-x1", "0"}, vec({1, -3}), vec({3, 3}), false},
      {"polar-speed-drag", 2, polar,
       {"-0.3*v1*sqrt(v1^2+x1^2*v2^2)", "-0.3*v2*sqrt(v1^2+x1^2*v2^2)"}, vec({1, -3}),
       vec({3, 3}), true},
      {"sphere-geodesic", 2, sphere, {"0", "0"}, vec({0.5, -3}), vec({2.6, 3}), true},
      {"sphere-speed-drag", 2, sphere,
       {"-0.3*v1*sqrt(v1^2+sin(x1)^2*v2^2)", "-0.3*v2*sqrt(v1^2+sin(x1)^2*v2^2)"},
       vec({0.5, -3}), vec({2.6, 3}), true},
      {"euclid3-speed-drag", 3, e3,
       {"-0.3*v1*sqrt(v1^2+v2^2+v3^2)", "-0.3*v2*sqrt(v1^2+v2^2+v3^2)",
        "-0.3*v3*sqrt(v1^2+v2^2+v3^2)"},
       box3_lo, box3_hi, true},
      {"euclid3-shear", 3, e3, {"v2", "0", "0"}, box3_lo, box3_hi, false},
  };
}

}  // namespace

NewtonSystem BundledSystem::build(GeometryOptions options) const {
  return {Manifold::parse(n, metric, options), ForceField::parse(n, force)};
}

const std::vector<BundledSystem>& bundled_systems() {
  static const std::vector<BundledSystem> systems = make_systems();
  return systems;
}

const BundledSystem& bundled_system(const std::string& name) {
  for (const auto& s : bundled_systems()) {
    if (s.name == name) return s;
  }
  throw Error("unknown bundled system \"" + name + "\"");
}

}  // namespace nshift
