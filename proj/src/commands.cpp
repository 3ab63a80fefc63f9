#include "nshift/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "nshift/blowup.hpp"
#include "nshift/deviation.hpp"
#include "nshift/error.hpp"
#include "nshift/identities.hpp"
#include "nshift/normality.hpp"

namespace nshift {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

std::string output_path(const std::string& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / name).string();
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write \"" + path + "\"");
  out << j.dump(2) << '\n';
}

json family(const FamilyStats& s) { return {{"max", s.max}, {"mean", s.mean}}; }

json base_report(const ScenarioConfig& cfg) {
  json r;
  r["config"] = cfg.echo;
  r["outputs"] = json::array();
  r["stats"] = json::object();
  return r;
}

json orthogonality_json(const FrontRecord& rec, const OrthogonalityReport& rep) {
  json j;
  j["max_abs_psi"] = rep.max_abs;
  j["mean_abs_psi"] = rep.mean_abs;
  j["defined"] = rep.defined;
  j["undefined"] = rep.undefined;
  j["inconclusive"] = rep.inconclusive;
  j["directions"] = rec.tracks.size();
  json per_t = json::array();
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    per_t.push_back({{"t", rep.times[i]},
                     {"max_abs_psi", rep.max_abs_psi[i]},
                     {"mean_abs_psi", rep.mean_abs_psi[i]}});
  }
  j["per_t"] = per_t;
  json slope = json::array();
  for (std::size_t d = 0; d < rep.slope.u.size(); ++d) {
    slope.push_back({{"dir_index", d},
                     {"u", to_json(rep.slope.u[d])},
                     {"measured", rep.slope.measured[d]},
                     {"expected", rep.slope.expected[d]}});
  }
  j["slope"] = {{"max_error", rep.slope.max_error}, {"directions", slope}};
  if (rec.common_nodes() >= 5) {
    json taylor = json::array();
    for (const auto& td : taylor_check(rec)) {
      taylor.push_back({{"x_ratio", td.x_ratio}, {"v_ratio", td.v_ratio}, {"tau_ratio", td.tau_ratio}});
    }
    j["taylor"] = taylor;
  }
  if (rec.abort) {
    j["abort"] = {{"direction", rec.abort->direction}, {"reason", rec.abort->reason}};
  }
  return j;
}

CommandResult front_command(const ScenarioConfig& cfg, const FrontRecord& rec,
                            const std::string& out_dir) {
  CommandResult res;
  res.report = base_report(cfg);
  const std::string csv = output_path(out_dir, "front.csv");
  {
    std::ofstream out(csv, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write \"" + csv + "\"");
    export_front(rec, out);
  }
  const OrthogonalityReport rep = orthogonality_report(rec);
  const std::string js = output_path(out_dir, "orthogonality.json");
  write_json(js, orthogonality_json(rec, rep));
  res.report["outputs"] = {csv, js};
  res.report["stats"] = {{"directions", rec.tracks.size()},
                         {"nodes", rec.common_nodes()},
                         {"max_abs_psi", rep.max_abs},
                         {"mean_abs_psi", rep.mean_abs},
                         {"slope_max_error", rep.slope.max_error}};
  if (rec.abort) {
    res.report["stats"]["abort"] = {{"direction", rec.abort->direction},
                                    {"reason", rec.abort->reason}};
    res.exit_code = kExitRuntimeAbort;
  } else if (rep.inconclusive) {
    res.exit_code = kExitInconclusive;
  }
  return res;
}

}  // namespace

CommandResult cmd_check(const ScenarioConfig& cfg, const std::string& out_dir) {
  const ResidualReport rep =
      classify(cfg.system.manifold, cfg.system.force, cfg.sampler, cfg.tolerance);
  json detail;
  detail["tolerance"] = rep.tolerance;
  detail["verdict"] = verdict_name(rep.verdict);
  detail["notes"] = rep.notes;
  detail["weak_max"] = rep.weak_max;
  detail["additional_max"] = rep.additional_max;
  detail["families"] = {{"R1", family(rep.R1)}, {"R2", family(rep.R2)},
                        {"A1", family(rep.A1)}, {"A2", family(rep.A2)}};
  json samples = json::array();
  for (const auto& s : rep.samples) {
    samples.push_back({{"x", to_json(s.q.x)},
                       {"v", to_json(s.q.v)},
                       {"R1", to_json(s.R1)},
                       {"R2", to_json(s.R2)},
                       {"A1", to_json(s.A1)},
                       {"A2", to_json(s.A2)},
                       {"norms",
                        {{"R1", s.norm_R1}, {"R2", s.norm_R2}, {"A1", s.norm_A1}, {"A2", s.norm_A2}}}});
  }
  detail["samples"] = samples;
  const std::string path = output_path(out_dir, "residuals.json");
  write_json(path, detail);

  CommandResult res;
  res.report = base_report(cfg);
  res.report["verdict"] = verdict_name(rep.verdict);
  res.report["outputs"] = {path};
  res.report["stats"] = {{"samples", rep.samples.size()},
                         {"tolerance", rep.tolerance},
                         {"weak_max", rep.weak_max},
                         {"additional_max", rep.additional_max},
                         {"families", detail["families"]},
                         {"notes", rep.notes}};
  res.exit_code = rep.verdict == Verdict::Inconclusive ? kExitInconclusive : kExitOk;
  return res;
}

CommandResult cmd_blowup(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (!cfg.blowup) throw ConfigError("blowup: section required for the blowup command");
  BlowupConfig bc;
  bc.p0 = cfg.blowup->p0;
  bc.nu0 = cfg.blowup->nu0;
  bc.nu = cfg.blowup->nu;
  bc.resolution = cfg.blowup->resolution;
  bc.t_end = cfg.integrator.t_end;
  bc.step = cfg.integrator.step;
  bc.output_every = cfg.integrator.output_every;
  return front_command(cfg, simulate_blowup(cfg.system, bc), out_dir);
}

CommandResult cmd_shift(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (!cfg.shift) throw ConfigError("shift: section required for the shift command");
  ShiftConfig sc;
  sc.surface = cfg.shift->surface;
  sc.t_end = cfg.integrator.t_end;
  sc.step = cfg.integrator.step;
  sc.output_every = cfg.integrator.output_every;
  return front_command(cfg, simulate_shift(cfg.system, sc), out_dir);
}

CommandResult cmd_rank(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (!cfg.rank) throw ConfigError("rank: section required for the rank command");
  CommandResult res;
  res.report = base_report(cfg);
  json trajectories = json::array();
  bool inconclusive = false;
  bool aborted = false;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < cfg.rank->trajectories.size(); ++i) {
    const auto& t = cfg.rank->trajectories[i];
    FlowState init{t.q, t.variations};
    const TrajectoryRecord rec =
        integrate(cfg.system, init, cfg.integrator.t_end, cfg.integrator.step);
    json entry = {{"index", i}};
    if (!rec.ok()) {
      entry["abort"] = {{"last_good_node", rec.abort->last_good_node},
                        {"reason", rec.abort->reason}};
      trajectories.push_back(entry);
      aborted = true;
      break;
    }
    const RankResult rr = deviation_rank(cfg.system.manifold, rec, cfg.rank->window_lo,
                                         cfg.rank->window_hi);
    entry["singular_values"] = rr.singular_values;
    entry["ratio"] = rr.ratio;
    entry["rows"] = rr.rows;
    entry["nodes"] = rr.nodes;
    entry["inconclusive"] = rr.inconclusive;
    if (!rr.note.empty()) entry["note"] = rr.note;
    if (rr.inconclusive) {
      inconclusive = true;
    } else {
      worst_ratio = std::max(worst_ratio, rr.ratio);
    }
    trajectories.push_back(entry);
  }
  json detail = {{"window", {cfg.rank->window_lo, cfg.rank->window_hi}},
                 {"trajectories", trajectories}};
  const std::string path = output_path(out_dir, "rank.json");
  write_json(path, detail);
  res.report["outputs"] = {path};
  res.report["stats"] = {{"trajectories", trajectories.size()},
                         {"max_ratio", worst_ratio},
                         {"inconclusive", inconclusive}};
  if (aborted) {
    res.exit_code = kExitRuntimeAbort;
  } else if (inconclusive) {
    res.exit_code = kExitInconclusive;
  }
  return res;
}

CommandResult cmd_selftest(const SelftestOptions& opt, const std::string& out_dir) {
  const auto suites = run_selftest(opt);
  json arr = json::array();
  bool all = true;
  for (const auto& s : suites) {
    json failures = json::array();
    for (const auto& f : s.failures) {
      failures.push_back({{"module", s.module},
                          {"system", f.system},
                          {"invariant", f.invariant},
                          {"observed", f.observed},
                          {"tolerance", f.tolerance}});
    }
    arr.push_back({{"name", s.name},
                   {"module", s.module},
                   {"status", s.pass() ? "pass" : "fail"},
                   {"checks", s.checks},
                   {"worst", s.worst},
                   {"tolerance", s.tolerance},
                   {"failures", failures}});
    all = all && s.pass();
  }
  CommandResult res;
  res.report["config"] = {{"seed", opt.seed},
                          {"perturb_riemann_sign", opt.geometry.flip_riemann_sign}};
  res.report["verdict"] = all ? "pass" : "fail";
  res.report["suites"] = arr;
  const std::string path = output_path(out_dir, "selftest.json");
  write_json(path, {{"suites", arr}});
  res.report["outputs"] = {path};
  res.report["stats"] = {{"suites", suites.size()}};
  res.exit_code = all ? kExitOk : kExitSelftestFailed;
  return res;
}

CommandResult run_command(const CommandOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult res;
  try {
    LoadOptions lo;
    lo.seed = opt.seed;
    lo.geometry.flip_riemann_sign = opt.perturb_riemann_sign;
    if (opt.command == "selftest") {
      SelftestOptions so;
      if (opt.seed) so.seed = *opt.seed;
      so.geometry = lo.geometry;
      res = cmd_selftest(so, opt.out_dir);
    } else {
      if (!opt.config_path) throw ConfigError("--config: required for " + opt.command);
      const ScenarioConfig cfg = load_config(*opt.config_path, lo);
      if (opt.command == "check") {
        res = cmd_check(cfg, opt.out_dir);
      } else if (opt.command == "blowup") {
        res = cmd_blowup(cfg, opt.out_dir);
      } else if (opt.command == "shift") {
        res = cmd_shift(cfg, opt.out_dir);
      } else if (opt.command == "rank") {
        res = cmd_rank(cfg, opt.out_dir);
      } else {
        throw ConfigError("command: unknown command \"" + opt.command + "\"");
      }
    }
  } catch (const ConfigError& e) {
    res.report = {{"error", e.what()}};
    res.exit_code = kExitConfigError;
  } catch (const std::exception& e) {
    res.report = {{"error", e.what()}};
    res.exit_code = kExitRuntimeAbort;
  }
  res.report["command"] = opt.command;
  const auto ms = std::chrono::duration<double, std::milli>(
      std::chrono::steady_clock::now() - start);
  res.report["duration_ms"] = ms.count();
  return res;
}

}  // namespace nshift
