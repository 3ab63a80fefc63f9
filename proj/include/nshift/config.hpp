#pragma once

// Scenario configuration: one JSON document. Every validation failure is a
// ConfigError whose message starts with the offending field path.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nshift/blowup.hpp"
#include "nshift/normality.hpp"

namespace nshift {

struct IntegratorSection {
  double step = 1e-3;
  double t_end = 1.0;
  int output_every = 1;
};

struct BlowupSection {
  Vec p0;
  double nu0 = 1.0;
  std::optional<expr::Expr> nu;  // expression form
  std::string nu_text;
  int resolution = 64;
};

struct ShiftSection {
  HypersurfaceSpec surface;
  std::string nu_text;
};

struct RankTrajectory {
  TangentPoint q;
  std::vector<VariationState> variations;
};

struct RankSection {
  std::vector<RankTrajectory> trajectories;
  double window_lo = 0.2;
  double window_hi = 1.0;
};

struct ScenarioConfig {
  int dimension = 2;
  std::vector<std::vector<std::string>> metric;
  std::vector<std::string> force;
  NewtonSystem system{Manifold::euclidean(2), ForceField::zero(2)};
  IntegratorSection integrator;
  std::optional<BlowupSection> blowup;
  std::optional<ShiftSection> shift;
  SamplerConfig sampler;
  std::optional<RankSection> rank;
  double tolerance = 1e-8;
  nlohmann::json echo;  // the document as read, with any seed override applied
};

struct LoadOptions {
  std::optional<std::uint64_t> seed;  // overrides sampler.seed
  GeometryOptions geometry;
};

ScenarioConfig parse_config(const nlohmann::json& doc, const LoadOptions& opt = {});
/// ConfigError on unreadable files or malformed JSON ("config: ...").
ScenarioConfig load_config(const std::string& path, const LoadOptions& opt = {});

}  // namespace nshift
