#include "qgsim_cli/cli.hpp"

#include <algorithm>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qgsim/errors.hpp"
#include "qgsim/parallel.hpp"
#include "qgsim/scenario.hpp"

namespace qgsim::cli {

namespace {

void report(const RunResult& result, const RunOptions& options, std::ostream& out, std::ostream& err) {
  for (const auto& f : result.files) out << (options.out_dir / f).string() << '\n';
  if (!result.message.empty()) {
    (result.exit_code == kExitSuccess ? out : err) << (result.exit_code == kExitSuccess ? "" : "error: ")
                                                   << result.message << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dicke-state interferometry simulator: scenarios, figure data, sweeps and feasibility numbers",
               "qgsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  std::string out_dir = "out";
  unsigned jobs = default_parallelism();
  std::string convention;
  bool force = false;
  bool fd_check = false;
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--convention", convention, "J_z normalization for the beta generator")
      ->check(CLI::IsMember({"half", "unit"}));
  app.add_flag("--force", force, "Overwrite a non-empty output directory");
  app.add_flag("--fd-check", fd_check, "Cross-check analytic derivatives against finite differences");

  std::string scenario_path;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file");
  run_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();

  std::string reproduce_id;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "Regenerate a figure or table at its reference settings");
  reproduce_cmd->add_option("id", reproduce_id, "fig2, fig3, fig4, qfi-table or feasibility")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "qfi-table", "feasibility"}));

  std::string sweep_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a one-axis parameter sweep");
  sweep_cmd->add_option("spec", sweep_path, "Sweep JSON")->required();

  PhysicalConfig physical;
  double mass_amu = physical.mass / kAtomicMassUnit;
  double sigma_um = physical.sigma * 1e6;
  double separation_um = physical.separation * 1e6;
  std::uint64_t mc_samples = 0;
  std::uint64_t seed = 0;
  auto* feas_cmd = app.add_subcommand("feasibility", "Print the laboratory feasibility report as JSON");
  feas_cmd->add_option("--mass-amu", mass_amu, "Particle mass in amu")->capture_default_str();
  feas_cmd->add_option("--sigma-um", sigma_um, "Cloud width in micrometres")->capture_default_str();
  feas_cmd->add_option("--separation-um", separation_um, "Cloud half-separation x_0 in micrometres")
      ->capture_default_str();
  feas_cmd->add_option("--time-s", physical.time, "Interaction time in seconds")->capture_default_str();
  feas_cmd->add_option("--reps", physical.repetitions, "Repetitions k")->capture_default_str();
  feas_cmd->add_option("--mc-samples", mc_samples, "Monte Carlo samples for kappa (0 skips)");
  feas_cmd->add_option("--seed", seed, "Monte Carlo seed")->capture_default_str();

  for (auto* sub : {run_cmd, reproduce_cmd, sweep_cmd, feas_cmd}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitConfigError;
  }

  RunOptions options;
  options.out_dir = out_dir;
  options.force = force;
  options.fd_check = fd_check;
  options.jobs = jobs;
  if (!convention.empty()) options.convention = parse_convention(convention);

  RunResult result = run_guarded([&]() -> RunResult {
    if (*run_cmd) return run_scenario(load_scenario(scenario_path), options);
    if (*reproduce_cmd) return reproduce(parse_reproduce_id(reproduce_id), options);
    if (*sweep_cmd) return run_sweep(load_sweep(sweep_path), options);
    physical.mass = mass_amu * kAtomicMassUnit;
    physical.sigma = sigma_um * 1e-6;
    physical.separation = separation_um * 1e-6;
    physical.validate();
    Json body = feasibility_to_json(feasibility_report(physical));
    if (mc_samples > 0) {
      Json mc = Json::array();
      for (auto [i, j, name] : {std::tuple{Mode::kA, Mode::kA, "aa"}, std::tuple{Mode::kA, Mode::kB, "ab"}}) {
        const MonteCarloEstimate e = kappa_monte_carlo(physical, i, j, mc_samples, seed, jobs);
        mc.push_back(Json{{"pair", name},
                          {"estimate", e.value},
                          {"standard_error", e.standard_error},
                          {"analytic", kappa_gaussian_analytic(physical, i, j)},
                          {"samples", e.samples},
                          {"seed", e.seed}});
      }
      body["monte_carlo"] = std::move(mc);
    }
    out << dump_json(body);
    return RunResult{};
  });
  if (*feas_cmd) {
    if (!result.message.empty()) err << "error: " << result.message << '\n';
    return result.exit_code;
  }
  report(result, options, out, err);
  return result.exit_code;
}

}  // namespace qgsim::cli
