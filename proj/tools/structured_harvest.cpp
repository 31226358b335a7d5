// Command-line front end for the size-structured harvesting model.
//
//   structured_harvest <steady|replacement|simulate|sweep|adjoint|report>
//       [--config FILE] [--out DIR] [--cells N] [--threshold CM]
//       [--horizon YR] [--jobs N]

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "structured_harvest/cli.hpp"

namespace sh = structured_harvest;

namespace {

unsigned resolve_jobs(std::optional<unsigned> flag) {
  if (flag && *flag > 0) return *flag;
  if (const char* env = std::getenv("STRUCTURED_HARVEST_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed STRUCTURED_HARVEST_JOBS='" << env << "'\n";
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Size-structured fishery model: steady states, replacement index, forward runs, "
               "threshold-policy optimization and adjoint diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> cells;
  std::optional<double> threshold;
  std::optional<double> horizon;
  std::optional<unsigned> jobs;
  app.add_option("--config", config_path, "JSON configuration file (defaults reproduce the case study)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--cells", cells, "Number of size cells");
  app.add_option("--threshold", threshold, "Minimum harvest size l* in cm (simulate, adjoint)");
  app.add_option("--horizon", horizon, "Simulation horizon in years");
  app.add_option("--jobs", jobs, "Worker threads for sweeps (env STRUCTURED_HARVEST_JOBS)");

  auto* steady = app.add_subcommand("steady", "No-harvest stationary state and closure curve");
  auto* replacement = app.add_subcommand("replacement", "Replacement index curve and critical crowding");
  std::optional<double> e_max;
  replacement->add_option("--e-max", e_max, "Upper end of the crowding range");
  auto* simulate = app.add_subcommand("simulate", "Forward PDE run under an optional threshold");
  auto* sweep = app.add_subcommand("sweep", "Threshold sweep and refined revenue optimum");
  auto* adjoint = app.add_subcommand("adjoint", "Stationary adjoint and switching analysis");
  auto* report = app.add_subcommand("report", "Full reproduction bundle with manifest");

  CLI11_PARSE(app, argc, argv);

  sh::RunConfig config;
  try {
    if (!config_path.empty()) config = sh::load_config(config_path);
  } catch (const sh::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return static_cast<int>(sh::ExitStatus::kValidationFailure);
  }
  if (cells) config.n_cells = *cells;
  if (out_dir) config.output_dir = *out_dir;

  sh::RunOptions opt;
  opt.out_dir = config.output_dir;
  opt.threshold = threshold;
  opt.horizon = horizon;
  opt.jobs = resolve_jobs(jobs);

  sh::RunOutcome outcome;
  if (*steady) outcome = sh::run_steady(config, opt);
  else if (*replacement) outcome = sh::run_replacement_curve(config, opt, e_max);
  else if (*simulate) outcome = sh::run_simulate(config, opt);
  else if (*sweep) outcome = sh::run_sweep(config, opt);
  else if (*adjoint) outcome = sh::run_adjoint(config, opt);
  else if (*report) outcome = sh::run_report(config, opt);

  if (!outcome.summary.is_null()) {
    auto shown = outcome.summary;
    if (*report) shown = shown["headline"];
    std::cout << shown.dump(2) << '\n';
  }
  return static_cast<int>(outcome.status);
}
