// Command-line front end: scenario solves, rate-energy region sweeps, solver
// validation suites and brute-force oracle comparisons. Consumers are scripts;
// all numeric output goes to fixed-column CSV plus a JSON sidecar.

#include "swipt/demo_setups.hpp"
#include "swipt/driver.hpp"
#include "swipt/oracles.hpp"
#include "swipt/validate.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int run_solve_cmd(const std::string& scenario_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed, std::optional<double> tol,
                  bool single_beam) {
  swipt::Scenario sc = swipt::load_scenario(scenario_path);
  if (seed) sc.seed = *seed;
  if (tol) sc.tol = *tol;
  if (single_beam) sc.single_beam = true;
  const swipt::SolveOutcome out = swipt::run_solve(sc);
  swipt::emit_summary(std::cout, out.summary);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    swipt::RERegion region;
    region.users = sc.users();
    region.frac_names = out.summary.frac_names;
    region.rows = {out.row};
    const auto csv = (std::filesystem::path(out_dir) / (sc.name + "_solve.csv")).string();
    swipt::write_region_csv(csv, region);
    std::cout << "wrote " << csv << "\n";
  }
  return 0;
}

int run_sweep_cmd(const std::string& scenario_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed, std::optional<double> tol,
                  bool single_beam) {
  swipt::Scenario sc = swipt::load_scenario(scenario_path);
  if (seed) sc.seed = *seed;
  if (tol) sc.tol = *tol;
  if (single_beam) sc.single_beam = true;
  if (!sc.sweep) {
    std::cerr << "scenario has no sweep section\n";
    return 2;
  }
  const swipt::SweepOutcome out = swipt::run_region_sweep(sc, out_dir);
  std::cout << "wrote " << out.csv_path << " (" << out.region.rows.size() << " rows) and "
            << out.sidecar_path << "\n";
  if (!out.all_feasible) std::cout << "note: some rows are infeasible (recorded per row)\n";
  return 0;
}

int run_validate_cmd(const std::string& suite, const swipt::validate::SuiteOptions& opts,
                     const std::string& report_path) {
  const auto checks = swipt::validate::run_suite(suite, opts);
  bool all_pass = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << c.detail << "  ["
              << swipt::format_double(c.seconds) << " s, seed " << c.seed << "]\n";
    all_pass = all_pass && c.pass;
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    out << swipt::validate::report_json(checks).dump(2) << "\n";
    std::cout << "wrote " << report_path << "\n";
  }
  return all_pass ? 0 : 1;
}

int run_oracle_cmd(const std::string& scenario_path, const std::string& type, int grid_n,
                   long grid_points, int state_index, std::vector<double> mu_in) {
  const swipt::Scenario sc = swipt::load_scenario(scenario_path);
  const swipt::ChannelEnsemble ens = sc.build_ensemble();
  if (state_index < 0 || state_index >= ens.size()) {
    std::cerr << "state index out of range\n";
    return 2;
  }
  const swipt::ChannelState& st = ens.states[static_cast<std::size_t>(state_index)];
  if (st.users() != 2) {
    std::cerr << "oracle comparisons are defined for K = 2 scenarios\n";
    return 2;
  }
  swipt::Vec mu(2);
  mu << (mu_in.size() > 0 ? mu_in[0] : 1.0), (mu_in.size() > 1 ? mu_in[1] : 1.0);

  if (type == "theta_grid") {
    const std::vector<swipt::CVec> rows{st.h.row(0).transpose(), st.h.row(1).transpose()};
    const auto cf = swipt::closed_form_two_user_ebf(rows, mu, sc.system.p_max);
    const auto grid = swipt::oracles::theta_grid_two_user(st.h, mu, sc.system.p_max, grid_points);
    std::cout << "closed-form value : " << swipt::format_double(cf.value) << "\n";
    std::cout << "phase-grid value  : " << swipt::format_double(grid.best_value) << " ("
              << grid_points << " phases)\n";
    std::cout << "dual bound        : "
              << swipt::format_double(sc.system.p_max * (cf.lambda1 + cf.lambda2)) << "\n";
  } else if (type == "fc_grid") {
    swipt::DualPoint dp;
    dp.mu = mu;
    const swipt::StateDecision d = swipt::fc_subproblem(st, dp, sc.system);
    const double f_solver = d.rates[0] + d.rates[1] + mu(0) * d.energies[0] + mu(1) * d.energies[1];
    const double f_oracle = swipt::fc_cross_check(st, dp, sc.system, grid_n);
    std::cout << "solver objective  : " << swipt::format_double(f_solver) << "\n";
    std::cout << "grid objective    : " << swipt::format_double(f_oracle) << " (grid_n=" << grid_n
              << ")\n";
    std::cout << "relative deviation: "
              << swipt::format_double((f_solver - f_oracle) / std::abs(f_oracle)) << "\n";
  } else {
    std::cerr << "unknown oracle type '" << type << "' (theta_grid | fc_grid)\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate-energy trade-off solver for cooperative wireless power transfer"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", suite = "prop1", report_path, oracle_type =
                                                                                "theta_grid";
  std::optional<std::uint64_t> seed_override;
  std::optional<double> tol_override;
  bool single_beam = false;
  int grid_n = 200, state_index = 0;
  long grid_points = 1000000;
  std::vector<double> mu_in;
  swipt::validate::SuiteOptions vopts;

  auto* solve = app.add_subcommand("solve", "solve one target vector and print a summary");
  solve->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  solve->add_option("--out", out_dir, "output directory (empty: no files)")->capture_default_str();
  solve->add_option("--seed", seed_override, "override the channel seed");
  solve->add_option("--tol", tol_override, "override the solver tolerance");
  solve->add_flag("--single-beam", single_beam, "restrict joint cooperation to one energy beam");

  auto* sweep = app.add_subcommand("sweep", "sweep the target grid and write the region CSV");
  sweep->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  sweep->add_option("--out", out_dir, "output directory")->capture_default_str();
  sweep->add_option("--seed", seed_override, "override the channel seed");
  sweep->add_option("--tol", tol_override, "override the solver tolerance");
  sweep->add_flag("--single-beam", single_beam, "restrict joint cooperation to one energy beam");

  auto* validate = app.add_subcommand("validate", "run a solver validation suite");
  validate
      ->add_option("--suite", suite,
                   "prop1 | appendix_dual | fc_oracle | sdp_gap | grouping_exhaustive")
      ->required();
  validate->add_option("--instances", vopts.instances, "instance count")->capture_default_str();
  validate->add_option("--grid-points", vopts.grid_points, "phase-grid size")
      ->capture_default_str();
  validate->add_option("--grid-n", vopts.grid_n, "per-axis grid size")->capture_default_str();
  validate->add_option("--n-states", vopts.n_states, "fading states for ensemble checks")
      ->capture_default_str();
  validate->add_option("--draws", vopts.draws, "randomization draws")->capture_default_str();
  validate->add_option("--seed", vopts.seed, "check seed")->capture_default_str();
  validate->add_option("--report", report_path, "write the machine-readable report here");

  auto* oracle = app.add_subcommand("oracle", "compare a solver result against a grid oracle");
  oracle->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  oracle->add_option("--type", oracle_type, "theta_grid | fc_grid")->capture_default_str();
  oracle->add_option("--grid-n", grid_n, "per-axis grid size")->capture_default_str();
  oracle->add_option("--grid-points", grid_points, "phase-grid size")->capture_default_str();
  oracle->add_option("--state", state_index, "fading-state index")->capture_default_str();
  oracle->add_option("--mu", mu_in, "dual weights, e.g. --mu 1.0 2.0");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return run_solve_cmd(scenario_path, out_dir, seed_override, tol_override, single_beam);
    if (sweep->parsed())
      return run_sweep_cmd(scenario_path, out_dir, seed_override, tol_override, single_beam);
    if (validate->parsed()) return run_validate_cmd(suite, vopts, report_path);
    if (oracle->parsed())
      return run_oracle_cmd(scenario_path, oracle_type, grid_n, grid_points, state_index, mu_in);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
