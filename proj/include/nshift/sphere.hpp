#pragma once

#include <vector>

#include "nshift/geometry.hpp"

namespace nshift {

/// One direction of the unit sphere in T_{p0}M.
struct SphereSample {
  Vec u;                  // sphere parameters u^1..u^{n-1}
  Vec direction;          // n(u), g(p0)-unit
  std::vector<Vec> tangents;  // K_a = ∂n/∂u^a
};

/// n = 2: u_j = 2πj/M. n ≥ 3: hyperspherical grid, polar angles in
/// [δ, π − δ] with δ = π/(4·resolution), `resolution` azimuth nodes and
/// resolution/2 nodes per polar angle. Directions are mapped through a
/// g(p0)-orthonormal frame, so n is g-unit and g-orthogonal to every K_a.
std::vector<SphereSample> sphere_grid(const Manifold& m, const Vec& p0,
                                      int resolution);

}  // namespace nshift
