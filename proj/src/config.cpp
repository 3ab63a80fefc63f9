#include "nshift/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "nshift/error.hpp"
#include "nshift/format.hpp"

namespace nshift {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path.empty() ? "config" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) fail(join(path, it.key()), "unknown field");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long long>();
}

Vec vector_of(const json& v, const std::string& path, int n) {
  if (!v.is_array()) fail(path, "expected an array of " + std::to_string(n) + " numbers");
  if (static_cast<int>(v.size()) != n) {
    fail(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  }
  Vec out(n);
  for (int k = 0; k < n; ++k) out[k] = number(v[k], path + "[" + std::to_string(k) + "]");
  return out;
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected an expression string");
  return v.get<std::string>();
}

expr::Expr expression(const json& v, const std::string& path, const expr::Variables& vars) {
  const std::string src = text(v, path);
  try {
    return expr::parse(src, vars);
  } catch (const ParseError& e) {
    fail(path, e.what());
  }
}

struct Nu {
  double constant = 1.0;
  std::optional<expr::Expr> expression;
  std::string text;
};

// ν as a positive number or an expression over u1..u{n-1}.
Nu parse_nu(const json& v, const std::string& path, int params) {
  Nu nu;
  if (v.is_number()) {
    nu.constant = number(v, path);
    if (!(nu.constant > 0.0)) fail(path, "must be positive");
    nu.text = format_double(nu.constant);
    return nu;
  }
  nu.expression = expression(v, path, expr::parameter_variables(params));
  nu.text = v.get<std::string>();
  return nu;
}

int positive_int(const json& obj, const std::string& key, const std::string& path, int fallback,
                 int minimum) {
  if (!obj.contains(key)) return fallback;
  const long long v = integer(obj[key], join(path, key));
  if (v < minimum || v > 1000000) {
    fail(join(path, key), "must be an integer in [" + std::to_string(minimum) + ", 1000000]");
  }
  return static_cast<int>(v);
}

IntegratorSection parse_integrator(const json& j) {
  IntegratorSection s;
  const std::string path = "integrator";
  check_keys(j, path, {"step", "t_end", "output_every"});
  if (j.contains("step")) s.step = number(j["step"], "integrator.step");
  if (!(s.step > 0.0)) fail("integrator.step", "must be positive");
  if (j.contains("t_end")) s.t_end = number(j["t_end"], "integrator.t_end");
  if (!(s.t_end > 0.0)) fail("integrator.t_end", "must be positive");
  try {
    step_count(s.t_end, s.step);
  } catch (const Error&) {
    fail("integrator.t_end", "must be an integer multiple of integrator.step");
  }
  s.output_every = positive_int(j, "output_every", path, 1, 1);
  return s;
}

BlowupSection parse_blowup(const json& j, int n) {
  const std::string path = "blowup";
  check_keys(j, path, {"p0", "nu", "resolution"});
  BlowupSection s;
  if (!j.contains("p0")) fail("blowup.p0", "required");
  s.p0 = vector_of(j["p0"], "blowup.p0", n);
  if (j.contains("nu")) {
    Nu nu = parse_nu(j["nu"], "blowup.nu", n - 1);
    s.nu0 = nu.constant;
    s.nu = nu.expression;
    s.nu_text = nu.text;
  } else {
    s.nu_text = format_double(s.nu0);
  }
  s.resolution = positive_int(j, "resolution", path, 64, 8);
  return s;
}

ShiftSection parse_shift(const json& j, int n) {
  const std::string path = "shift";
  check_keys(j, path, {"surface", "u_lo", "u_hi", "nu", "resolution", "flip_normal"});
  ShiftSection s;
  if (!j.contains("surface")) fail("shift.surface", "required");
  const json& surf = j["surface"];
  if (!surf.is_array() || static_cast<int>(surf.size()) != n) {
    fail("shift.surface", "expected " + std::to_string(n) + " expression strings");
  }
  const auto params = expr::parameter_variables(n - 1);
  for (int k = 0; k < n; ++k) {
    s.surface.map.push_back(
        expression(surf[k], "shift.surface[" + std::to_string(k) + "]", params));
  }
  if (!j.contains("u_lo")) fail("shift.u_lo", "required");
  if (!j.contains("u_hi")) fail("shift.u_hi", "required");
  s.surface.u_lo = vector_of(j["u_lo"], "shift.u_lo", n - 1);
  s.surface.u_hi = vector_of(j["u_hi"], "shift.u_hi", n - 1);
  for (int a = 0; a < n - 1; ++a) {
    if (!(s.surface.u_hi[a] > s.surface.u_lo[a])) fail("shift.u_hi", "must exceed shift.u_lo");
  }
  if (j.contains("nu")) {
    Nu nu = parse_nu(j["nu"], "shift.nu", n - 1);
    s.surface.nu = nu.expression ? *nu.expression : expr::Expr::constant(nu.constant);
    s.nu_text = nu.text;
  } else {
    s.surface.nu = expr::Expr::constant(1.0);
    s.nu_text = "1";
  }
  s.surface.resolution = positive_int(j, "resolution", path, 64, 1);
  if (j.contains("flip_normal")) {
    if (!j["flip_normal"].is_boolean()) fail("shift.flip_normal", "expected a boolean");
    s.surface.flip_normal = j["flip_normal"].get<bool>();
  }
  return s;
}

SamplerConfig parse_sampler(const json* j, int n) {
  SamplerConfig s;
  s.x_lo = Vec::Constant(n, -1.0);
  s.x_hi = Vec::Constant(n, 1.0);
  if (!j) return s;
  const std::string path = "sampler";
  check_keys(*j, path, {"x_lo", "x_hi", "v_min", "v_max", "count", "seed", "shells"});
  if (j->contains("x_lo")) s.x_lo = vector_of((*j)["x_lo"], "sampler.x_lo", n);
  if (j->contains("x_hi")) s.x_hi = vector_of((*j)["x_hi"], "sampler.x_hi", n);
  for (int k = 0; k < n; ++k) {
    if (!(s.x_hi[k] >= s.x_lo[k])) fail("sampler.x_hi", "must not be below sampler.x_lo");
  }
  if (j->contains("v_min")) s.v_min = number((*j)["v_min"], "sampler.v_min");
  if (!(s.v_min > 0.0)) fail("sampler.v_min", "must be positive");
  if (j->contains("v_max")) s.v_max = number((*j)["v_max"], "sampler.v_max");
  if (!(s.v_max >= s.v_min)) fail("sampler.v_max", "must not be below sampler.v_min");
  s.count = static_cast<std::size_t>(positive_int(*j, "count", path, 1000, 1));
  s.shells = positive_int(*j, "shells", path, 8, 1);
  if (j->contains("seed")) {
    const long long seed = integer((*j)["seed"], "sampler.seed");
    if (seed < 0) fail("sampler.seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  return s;
}

RankSection parse_rank(const json& j, int n, std::uint64_t seed) {
  const std::string path = "rank";
  check_keys(j, path, {"trajectories", "variations", "window"});
  RankSection s;
  if (j.contains("window")) {
    const Vec w = vector_of(j["window"], "rank.window", 2);
    s.window_lo = w[0];
    s.window_hi = w[1];
  }
  if (!(s.window_hi > s.window_lo) || s.window_lo < 0.0) {
    fail("rank.window", "expected 0 <= lo < hi");
  }

  std::vector<VariationState> explicit_vars;
  std::size_t random_count = 5;
  if (j.contains("variations")) {
    const json& v = j["variations"];
    if (v.is_number_integer()) {
      const long long c = v.get<long long>();
      if (c < 4) fail("rank.variations", "at least 4 variations are required");
      if (c > 64) fail("rank.variations", "at most 64 variations are supported");
      random_count = static_cast<std::size_t>(c);
    } else if (v.is_array()) {
      if (v.size() < 4) fail("rank.variations", "at least 4 variations are required");
      for (std::size_t a = 0; a < v.size(); ++a) {
        const std::string p = "rank.variations[" + std::to_string(a) + "]";
        check_keys(v[a], p, {"tau", "rate"});
        if (!v[a].contains("tau")) fail(p + ".tau", "required");
        if (!v[a].contains("rate")) fail(p + ".rate", "required");
        explicit_vars.push_back(
            {vector_of(v[a]["tau"], p + ".tau", n), vector_of(v[a]["rate"], p + ".rate", n)});
      }
    } else {
      fail("rank.variations", "expected a count or an array of {tau, rate}");
    }
  }

  if (!j.contains("trajectories")) fail("rank.trajectories", "required");
  const json& tr = j["trajectories"];
  if (!tr.is_array() || tr.empty()) fail("rank.trajectories", "expected a non-empty array");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] {
    return -1.0 + 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const std::string p = "rank.trajectories[" + std::to_string(i) + "]";
    check_keys(tr[i], p, {"x", "v"});
    if (!tr[i].contains("x")) fail(p + ".x", "required");
    if (!tr[i].contains("v")) fail(p + ".v", "required");
    RankTrajectory t;
    t.q = {vector_of(tr[i]["x"], p + ".x", n), vector_of(tr[i]["v"], p + ".v", n)};
    if (!explicit_vars.empty()) {
      t.variations = explicit_vars;
    } else {
      for (std::size_t a = 0; a < random_count; ++a) {
        VariationState vs{Vec(n), Vec(n)};
        for (int k = 0; k < n; ++k) vs.tau[k] = uniform();
        for (int k = 0; k < n; ++k) vs.rate[k] = uniform();
        t.variations.push_back(vs);
      }
    }
    s.trajectories.push_back(std::move(t));
  }
  return s;
}

}  // namespace

ScenarioConfig parse_config(const json& doc, const LoadOptions& opt) {
  check_keys(doc, "", {"dimension", "metric", "force", "integrator", "blowup", "shift",
                       "sampler", "rank", "tolerance"});
  ScenarioConfig cfg;
  if (!doc.contains("dimension")) fail("dimension", "required");
  const long long n = integer(doc["dimension"], "dimension");
  if (n < 2 || n > 4) fail("dimension", "must be in [2, 4]");
  cfg.dimension = static_cast<int>(n);
  const int dim = cfg.dimension;

  if (doc.contains("metric")) {
    const json& g = doc["metric"];
    if (!g.is_array() || static_cast<int>(g.size()) != dim) {
      fail("metric", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                         " array of expression strings");
    }
    for (int i = 0; i < dim; ++i) {
      const std::string row = "metric[" + std::to_string(i) + "]";
      if (!g[i].is_array() || static_cast<int>(g[i].size()) != dim) {
        fail(row, "expected " + std::to_string(dim) + " expression strings");
      }
      std::vector<std::string> r;
      for (int j = 0; j < dim; ++j) {
        r.push_back(text(g[i][j], row + "[" + std::to_string(j) + "]"));
      }
      cfg.metric.push_back(std::move(r));
    }
  } else {
    cfg.metric.assign(dim, std::vector<std::string>(dim, "0"));
    for (int i = 0; i < dim; ++i) cfg.metric[i][i] = "1";
  }

  if (doc.contains("force")) {
    const json& f = doc["force"];
    if (!f.is_array() || static_cast<int>(f.size()) != dim) {
      fail("force", "expected " + std::to_string(dim) + " expression strings");
    }
    for (int k = 0; k < dim; ++k) cfg.force.push_back(text(f[k], "force[" + std::to_string(k) + "]"));
  } else {
    cfg.force.assign(dim, "0");
  }

  Manifold m = Manifold::parse(dim, cfg.metric, opt.geometry);
  ForceField f = ForceField::parse(dim, cfg.force);
  cfg.system = NewtonSystem{std::move(m), std::move(f)};

  static const json empty = json::object();
  cfg.integrator = parse_integrator(doc.contains("integrator") ? doc["integrator"] : empty);
  cfg.sampler = parse_sampler(doc.contains("sampler") ? &doc["sampler"] : nullptr, dim);
  if (opt.seed) cfg.sampler.seed = *opt.seed;
  if (doc.contains("blowup")) cfg.blowup = parse_blowup(doc["blowup"], dim);
  if (doc.contains("shift")) cfg.shift = parse_shift(doc["shift"], dim);
  if (doc.contains("rank")) {
    cfg.rank = parse_rank(doc["rank"], dim, cfg.sampler.seed);
    if (cfg.rank->window_hi > cfg.integrator.t_end * (1.0 + 1e-12)) {
      fail("rank.window", "must end at or before integrator.t_end");
    }
  }
  if (doc.contains("tolerance")) {
    cfg.tolerance = number(doc["tolerance"], "tolerance");
    if (!(cfg.tolerance > 0.0)) fail("tolerance", "must be positive");
  }

  cfg.echo = doc;
  if (opt.seed) cfg.echo["sampler"]["seed"] = *opt.seed;
  return cfg;
}

ScenarioConfig load_config(const std::string& path, const LoadOptions& opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(doc, opt);
}

}  // namespace nshift
