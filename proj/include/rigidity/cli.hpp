#pragma once
// Command line front end. run_cli returns the process exit code:
// 0 all checks pass, 1 a check failed, 2 usage or config error, 3 numerical failure.

#include "rigidity/scenarios.hpp"

#include <CLI11.hpp>
#include <iostream>

namespace rigidity {

enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_usage = 2, exit_numerical = 3 };

namespace detail {

inline void write_report(const CheckReport& rep, const ScenarioConfig& cfg, std::ostream& out) {
  const std::string body = cfg.format == "csv" ? rep.to_csv(false) : rep.to_json(false).dump(2) + "\n";
  out << body;
  if (!cfg.out_dir.empty()) {
    const auto path = std::filesystem::path(cfg.out_dir) / (rep.scenario() + (cfg.format == "csv" ? ".csv" : ".json"));
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << body;
  }
}

inline int eigen_command(int n, double delta, std::ostream& out) {
  const CapEigenResult r = neumann_mu(n, delta);
  out << std::setprecision(17) << "n,delta,mu,residual,min_dJ,solves\n"
      << n << "," << delta << "," << r.mu << "," << r.residual << "," << r.min_dJ << "," << r.solves << "\n";
  return r.residual < 1e-8 ? exit_pass : exit_fail;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"rigidity-lab: numerical checks of scalar curvature rigidity identities"};
  app.require_subcommand(1);
  std::string config_path, out_dir, format;
  int grid = 0;
  std::int64_t seed = -1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON scenario config");
    sub->add_option("--grid", grid, "grid nodes per axis");
    sub->add_option("--out", out_dir, "directory for report files");
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", seed, "seed for pseudo-random streams");
  };
  int eig_n = 3;
  double eig_delta = pi / 2;
  CLI::App* eig = app.add_subcommand("eigen", "first Neumann eigenvalue of a spherical cap");
  eig->add_option("--n", eig_n, "dimension")->required();
  eig->add_option("--delta", eig_delta, "cap radius")->required();
  std::vector<CLI::App*> subs;
  for (const auto& name : scenario_names()) {
    subs.push_back(app.add_subcommand(name, "scenario " + name));
    common(subs.back());
  }
  CLI::App* all = app.add_subcommand("all", "every scenario in sequence");
  common(all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_pass : exit_usage;
  }

  try {
    if (eig->parsed()) return detail::eigen_command(eig_n, eig_delta, out);

    ScenarioConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (grid != 0) cfg.grid = grid;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!format.empty()) cfg.format = format;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.validate();

    std::vector<std::string> names;
    if (all->parsed()) names = scenario_names();
    else
      for (CLI::App* s : subs)
        if (s->parsed()) names.push_back(s->get_name());
    if (!cfg.scenario.empty() && !all->parsed() && cfg.scenario != names.front())
      throw ConfigError("config is for scenario '" + cfg.scenario + "', not '" + names.front() + "'");

    bool ok = true;
    for (const auto& name : names) {
      CheckReport rep = run_scenario(name, cfg);
      detail::write_report(rep, cfg, out);
      err << name << ": " << (rep.passed() ? "PASS" : "FAIL") << " (" << std::fixed << std::setprecision(2)
          << rep.wall_seconds() << " s)\n";
      ok = ok && rep.passed();
    }
    return ok ? exit_pass : exit_fail;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  }
}

}  // namespace rigidity
