#pragma once

// Named test systems shared by the self-test command and the test suites.

#include <string>
#include <vector>

#include "nshift/dynamics.hpp"

namespace nshift {

struct BundledSystem {
  std::string name;
  int n = 2;
  std::vector<std::vector<std::string>> metric;
  std::vector<std::string> force;
  Vec x_lo;  // chart region used for sampling and random trajectories
  Vec x_hi;
  bool weakly_normal = false;

  NewtonSystem build(GeometryOptions options = {}) const;
};

/// All bundled systems, in a fixed order.
const std::vector<BundledSystem>& bundled_systems();
/// Throws Error for an unknown name.
const BundledSystem& bundled_system(const std::string& name);

}  // namespace nshift
