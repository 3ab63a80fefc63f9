#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nshift/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Newtonian dynamics on Riemannian manifolds: normality checks, blow-ups, shifts"};
  app.require_subcommand(1, 1);

  nshift::CommandOptions opt;
  std::string config;
  std::int64_t seed = 0;
  bool perturb = false;

  const char* names[][2] = {
      {"check", "classify the force field by sampled normality residuals"},
      {"blowup", "blow up a point and measure front orthogonality"},
      {"shift", "shift a parametric hypersurface and measure front orthogonality"},
      {"rank", "singular values of deviation functions along trajectories"},
      {"selftest", "run the built-in identity suites"},
  };
  for (auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* cfg = sub->add_option("--config", config, "scenario JSON file");
    if (std::string(name) != "selftest") cfg->required();
    sub->add_option("--out-dir", opt.out_dir, "directory for output files")->capture_default_str();
    sub->add_option("--seed", seed, "seed override")->check(CLI::NonNegativeNumber);
    sub->add_flag("--perturb-riemann-sign", perturb, "debug: negate the curvature tensor");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nshift::kExitConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  opt.command = sub->get_name();
  if (!config.empty()) opt.config_path = config;
  if (sub->count("--seed")) opt.seed = static_cast<std::uint64_t>(seed);
  opt.perturb_riemann_sign = perturb;

  const nshift::CommandResult res = nshift::run_command(opt);
  if (res.report.contains("error")) {
    std::cerr << res.report["error"].get<std::string>() << '\n';
  }
  std::cout << res.report.dump(2) << '\n';
  return res.exit_code;
}
