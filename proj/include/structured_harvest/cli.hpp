#pragma once

// Scenario runners behind the command-line tool. Each runner validates the
// configuration, runs its solvers and writes CSV/JSON artifacts into the
// output directory. Results are computed first and written by one writer.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "structured_harvest/adjoint.hpp"
#include "structured_harvest/grid.hpp"
#include "structured_harvest/io.hpp"
#include "structured_harvest/model.hpp"
#include "structured_harvest/policy.hpp"
#include "structured_harvest/replacement.hpp"
#include "structured_harvest/steady.hpp"
#include "structured_harvest/transport.hpp"

namespace structured_harvest {

enum class ExitStatus : int {
  kSuccess = 0,
  kValidationFailure = 2,
  kNumericalFailure = 3,
  kPartialReport = 4,
};

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<double> threshold;  // l* for simulate/adjoint
  std::optional<double> horizon;    // overrides T
  unsigned jobs = 1;
  std::ostream* log = &std::cerr;
};

struct RunOutcome {
  ExitStatus status = ExitStatus::kSuccess;
  json summary;
  std::vector<std::string> messages;
};

namespace detail {

struct Context {
  RunConfig config;
  VonBertalanffyForms model;
  SizeGrid grid;
  std::string hash;
};

inline json stamp(const Context& ctx) { return {{"config_hash", ctx.hash}, {"n_cells", ctx.grid.n_cells}}; }

inline void log_line(const RunOptions& opt, const std::string& s) {
  if (opt.log != nullptr) *opt.log << s << '\n';
}

/// Validates parameters and builds the model and grid, or fills `fail`.
inline std::optional<Context> prepare(const RunConfig& config, const RunOptions& opt, RunOutcome& fail) {
  const ParamReport report = validate_params(config.params);
  for (const auto& w : report.warnings) {
    fail.messages.push_back("warning: " + w.field + ": " + w.message);
    log_line(opt, fail.messages.back());
  }
  std::vector<std::string> errors;
  for (const auto& e : report.errors) errors.push_back(e.field + ": " + e.message);
  if (config.n_cells < 2) errors.push_back("n_cells: at least 2 cells required");
  if (!(config.cfl_safety > 0.0 && config.cfl_safety <= 1.0)) errors.push_back("cfl_safety: must lie in (0, 1]");
  if (opt.horizon && !(*opt.horizon > 0.0)) errors.push_back("horizon: must be positive");
  if (!errors.empty()) {
    fail.status = ExitStatus::kValidationFailure;
    for (auto& e : errors) {
      log_line(opt, "invalid config: " + e);
      fail.messages.push_back(std::move(e));
    }
    return std::nullopt;
  }
  std::filesystem::create_directories(opt.out_dir);
  Context ctx{config, VonBertalanffyForms(config.params), build_grid(config.params, config.n_cells),
              config_hash(config)};
  return ctx;
}

inline double horizon_of(const Context& ctx, const RunOptions& opt) { return opt.horizon.value_or(ctx.config.params.T); }

inline PopulationState initial_state(const Context& ctx) {
  switch (ctx.config.initial_condition) {
    case InitialCondition::kZero:
      return PopulationState{0.0, std::vector<double>(ctx.grid.n_cells, 0.0)};
    case InitialCondition::kCustomFile:
      return read_initial_profile(ctx.config.initial_file, ctx.grid);
    case InitialCondition::kNoHarvestSteady:
      break;
  }
  const auto steady = solve_discrete_steady_state(ctx.model, ctx.grid, no_harvest_policy(ctx.grid));
  if (!steady.ok) throw std::runtime_error(steady.message);
  return steady.state;
}

inline EvaluationSetup evaluation_setup(const Context& ctx, const RunOptions& opt) {
  EvaluationSetup setup;
  setup.initial = initial_state(ctx);
  setup.horizon = horizon_of(ctx, opt);
  setup.simulation.cfl_safety = ctx.config.cfl_safety;
  setup.mapping = ctx.config.threshold_mapping;
  setup.convergence_tolerance = ctx.config.convergence_tolerance;
  return setup;
}

inline json evaluation_json(const PolicyEvaluation& ev) {
  return {{"l_star", ev.l_star},
          {"J_T", ev.J_T},
          {"E_terminal", ev.E_terminal},
          {"N_terminal", ev.N_terminal},
          {"R_terminal", ev.R_terminal},
          {"viable", ev.viable},
          {"conv_time_E", number_or_null(ev.convergence.E)},
          {"conv_time_N", number_or_null(ev.convergence.N)}};
}

// Runs `body`, turning numerical exceptions into a failed outcome.
template <class Body>
RunOutcome guarded(const RunOptions& opt, Body&& body) {
  RunOutcome out;
  try {
    body(out);
  } catch (const ConfigError& e) {
    out.status = ExitStatus::kValidationFailure;
    out.messages.push_back(e.what());
    log_line(opt, std::string("invalid config: ") + e.what());
  } catch (const std::exception& e) {
    out.status = ExitStatus::kNumericalFailure;
    out.messages.push_back(e.what());
    log_line(opt, std::string("numerical failure: ") + e.what());
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// No-harvest closure: profile.csv (l,x), closure_curve.csv (E,F), steady.json.
inline RunOutcome run_steady(const RunConfig& config, const RunOptions& opt) {
  RunOutcome out;
  auto ctx = detail::prepare(config, opt, out);
  if (!ctx) return out;
  auto run = detail::guarded(opt, [&](RunOutcome& o) {
    const auto sol = solve_steady_crowding(ctx->model, ctx->grid);
    if (!sol.ok) {
      o.status = ExitStatus::kNumericalFailure;
      o.messages.push_back(sol.message);
      detail::log_line(opt, "numerical failure: " + sol.message);
      return;
    }
    if (config.params.p == 0.0) {
      o.messages.push_back("warning: zero inflow gives an empty stationary profile");
      detail::log_line(opt, o.messages.back());
    }
    const double R = replacement_index(ctx->model, sol.E, ctx->grid);

    constexpr int kCurvePoints = 101;
    const double e_hi = sol.E > 0.0 ? 2.0 * sol.E : sol.bound;
    std::vector<double> curve_E(kCurvePoints);
    std::vector<double> curve_F(kCurvePoints);
    for (int k = 0; k < kCurvePoints; ++k) {
      curve_E[k] = e_hi * k / (kCurvePoints - 1);
      curve_F[k] = closure_residual(ctx->model, curve_E[k], ctx->grid);
    }

    write_profile_csv(opt.out_dir / "profile.csv", sol.profile.nodes, sol.profile.profile);
    CsvWriter w(opt.out_dir / "closure_curve.csv", {"E", "F"});
    for (int k = 0; k < kCurvePoints; ++k) {
      w.cell(curve_E[k]).cell(curve_F[k]);
      w.end_row();
    }
    o.summary = detail::stamp(*ctx);
    o.summary["E_star"] = sol.E;
    o.summary["N_star"] = sol.profile.N;
    o.summary["R_at_E_star"] = R;
    o.summary["dt"] = cfl_timestep(ctx->model, ctx->grid, config.cfl_safety);
    write_json(opt.out_dir / "steady.json", o.summary);
  });
  run.messages.insert(run.messages.begin(), out.messages.begin(), out.messages.end());
  return run;
}

/// R(E) over [0, e_max]: replacement_curve.csv (E,R), replacement_markers.csv
/// (marker,E,R) and replacement.json. e_max defaults to 2 E_crit.
inline RunOutcome run_replacement_curve(const RunConfig& config, const RunOptions& opt,
                                        std::optional<double> e_max = std::nullopt, int samples = 201) {
  RunOutcome out;
  auto ctx = detail::prepare(config, opt, out);
  if (!ctx) return out;
  auto run = detail::guarded(opt, [&](RunOutcome& o) {
    const auto crit = critical_crowding(ctx->model, ctx->grid);
    const auto steady = solve_steady_crowding(ctx->model, ctx->grid);
    double hi = e_max.value_or(crit.E_crit ? 2.0 * *crit.E_crit : 2.0 * std::max(steady.E, 1.0));
    if (!(hi > 0.0)) hi = 1.0;

    CsvWriter w(opt.out_dir / "replacement_curve.csv", {"E", "R"});
    for (int k = 0; k < samples; ++k) {
      const double E = hi * k / (samples - 1);
      w.cell(E).cell(replacement_index(ctx->model, E, ctx->grid));
      w.end_row();
    }
    CsvWriter m(opt.out_dir / "replacement_markers.csv", {"marker", "E", "R"});
    if (steady.ok) {
      m.raw("E_star").cell(steady.E).cell(replacement_index(ctx->model, steady.E, ctx->grid));
      m.end_row();
    }
    if (crit.E_crit) {
      m.raw("E_crit").cell(*crit.E_crit).cell(replacement_index(ctx->model, *crit.E_crit, ctx->grid));
      m.end_row();
    }

    o.summary = detail::stamp(*ctx);
    o.summary["E_crit"] = number_or_null(crit.E_crit);
    o.summary["E_star"] = steady.ok ? json(steady.E) : json(nullptr);
    o.summary["R_at_zero"] = crit.R_at_zero;
    o.summary["status"] = crit.status == CriticalStatus::kFound         ? "found"
                          : crit.status == CriticalStatus::kNeverViable ? "never viable"
                                                                         : "no critical value in range";
    write_json(opt.out_dir / "replacement.json", o.summary);
  });
  run.messages.insert(run.messages.begin(), out.messages.begin(), out.messages.end());
  return run;
}

/// Forward run under an optional threshold: trajectory.csv, snapshot CSVs at
/// the start and the end, simulate.json.
inline RunOutcome run_simulate(const RunConfig& config, const RunOptions& opt) {
  RunOutcome out;
  auto ctx = detail::prepare(config, opt, out);
  if (!ctx) return out;
  auto run = detail::guarded(opt, [&](RunOutcome& o) {
    const auto setup = detail::evaluation_setup(*ctx, opt);
    const auto policy = make_threshold_policy(opt.threshold, config.params.u_max, ctx->grid, setup.mapping);
    SimulationOptions sim = setup.simulation;
    sim.snapshot_times = {0.0, setup.horizon};
    const auto rec = simulate(setup.initial, policy, ctx->model, ctx->grid, setup.horizon, sim);
    const auto conv = convergence_times(rec, setup.convergence_tolerance);

    write_trajectory_csv(opt.out_dir / "trajectory.csv", rec);
    json snaps = json::array();
    for (std::size_t s = 0; s < rec.snapshots.size(); ++s) {
      const std::string name = "snapshot_" + std::to_string(s) + ".csv";
      write_profile_csv(opt.out_dir / name, ctx->grid.centers, rec.snapshots[s].density);
      snaps.push_back({{"file", name}, {"t", rec.snapshots[s].t}});
    }
    o.summary = detail::stamp(*ctx);
    o.summary["l_star"] = number_or_null(opt.threshold);
    o.summary["effective_threshold"] = opt.threshold ? json(policy.effective_threshold) : json(nullptr);
    o.summary["E_terminal"] = rec.E_series.back();
    o.summary["N_terminal"] = rec.N_series.back();
    o.summary["conv_time_E"] = number_or_null(conv.E);
    o.summary["conv_time_N"] = number_or_null(conv.N);
    o.summary["J_T"] = discounted_revenue(rec, ctx->model);
    o.summary["dt"] = rec.dt;
    o.summary["steps"] = rec.steps;
    o.summary["snapshots"] = snaps;
    write_json(opt.out_dir / "simulate.json", o.summary);
  });
  run.messages.insert(run.messages.begin(), out.messages.begin(), out.messages.end());
  return run;
}

namespace detail {

struct SweepRun {
  std::vector<double> l_grid;
  SweepResult sweep;
  RefinedOptimum optimum;
  bool all_viable = true;
  std::size_t failures = 0;
};

inline SweepRun sweep_and_refine(const Context& ctx, const RunOptions& opt, const EvaluationSetup& setup) {
  SweepRun s;
  const auto& p = ctx.config.params;
  s.l_grid = threshold_lattice(ctx.config.sweep.lo.value_or(p.l0), ctx.config.sweep.hi.value_or(p.lm),
                               ctx.config.sweep.spacing);
  s.sweep = sweep_thresholds(s.l_grid, ctx.model, ctx.grid, setup, opt.jobs);
  for (const auto& ev : s.sweep.evaluations) {
    if (!ev.ok()) ++s.failures;
    else if (!ev.viable) s.all_viable = false;
  }
  if (s.sweep.argmax) s.optimum = refine_optimum(s.sweep, s.l_grid, ctx.model, ctx.grid, setup);
  return s;
}

inline void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  CsvWriter w(path, {"l_star", "J_T", "E_terminal", "N_terminal", "R_terminal", "viable", "conv_time_E",
                     "conv_time_N"});
  for (const auto& ev : sweep.evaluations) {
    w.cell(ev.l_star);
    if (ev.ok()) {
      w.cell(ev.J_T).cell(ev.E_terminal).cell(ev.N_terminal).cell(ev.R_terminal).cell(ev.viable);
      w.cell(ev.convergence.E).cell(ev.convergence.N);
    } else {
      for (int k = 0; k < 7; ++k) w.raw("");
    }
    w.end_row();
  }
}

inline json optimum_json(const SweepRun& s) {
  json j;
  const auto& ev = s.optimum.evaluation;
  j["l_star_opt"] = s.optimum.l_star;
  j["J_T_opt"] = ev.J_T;
  j["R"] = ev.R_terminal;
  j["E"] = ev.E_terminal;
  j["N"] = ev.N_terminal;
  j["viable"] = ev.viable;
  j["coarse_argmax"] = s.l_grid[*s.sweep.argmax];
  j["all_swept_viable"] = s.all_viable;
  j["failed_candidates"] = s.failures;
  j["warnings"] = s.optimum.warnings;
  return j;
}

}  // namespace detail

/// Threshold sweep plus golden-section refinement: sweep.csv and optimum.json.
inline RunOutcome run_sweep(const RunConfig& config, const RunOptions& opt) {
  RunOutcome out;
  auto ctx = detail::prepare(config, opt, out);
  if (!ctx) return out;
  auto run = detail::guarded(opt, [&](RunOutcome& o) {
    const auto setup = detail::evaluation_setup(*ctx, opt);
    const auto s = detail::sweep_and_refine(*ctx, opt, setup);
    detail::write_sweep_csv(opt.out_dir / "sweep.csv", s.sweep);
    o.summary = detail::stamp(*ctx);
    if (!s.sweep.argmax) {
      o.status = ExitStatus::kNumericalFailure;
      o.messages.push_back("every sweep candidate failed");
      write_json(opt.out_dir / "optimum.json", o.summary);
      return;
    }
    o.summary.update(detail::optimum_json(s));
    for (const auto& w : s.optimum.warnings) {
      o.messages.push_back("warning: " + w);
      detail::log_line(opt, o.messages.back());
    }
    if (s.failures > 0) o.status = ExitStatus::kPartialReport;
    write_json(opt.out_dir / "optimum.json", o.summary);
  });
  run.messages.insert(run.messages.begin(), out.messages.begin(), out.messages.end());
  return run;
}

namespace detail {

struct AdjointRun {
  double E = 0.0;
  bool closure_ok = false;
  AdjointProfile adjoint;
  SwitchingOutcome outcome;
  double coupling = 0.0;
  std::optional<double> ratio;
  FixedPointResult fixed_point;
};

inline AdjointRun adjoint_at(const Context& ctx, double l_star) {
  AdjointRun a;
  const auto policy = make_threshold_policy(l_star, ctx.config.params.u_max, ctx.grid, ctx.config.threshold_mapping);
  const auto steady = solve_steady_crowding(ctx.model, ctx.grid, &policy);
  if (!steady.ok) throw std::runtime_error("harvested closure failed: " + steady.message);
  a.closure_ok = true;
  a.E = steady.E;
  a.adjoint = solve_stationary_adjoint(ctx.model, steady.E, policy, ctx.grid);
  a.outcome = extract_threshold(switching_function(a.adjoint, ctx.model), a.adjoint.nodes);
  a.coupling = nonlocal_coupling_term(steady.profile, a.adjoint, ctx.model, ctx.grid);
  a.ratio = weak_coupling_ratio(steady.profile, a.adjoint, ctx.model, ctx.grid);
  a.fixed_point = adjoint_fixed_point(ctx.model, ctx.grid, l_star);
  return a;
}

inline json adjoint_json(const AdjointRun& a, double l_star) {
  return {{"l_star_policy", l_star},
          {"E", a.E},
          {"case", to_string(a.outcome.which)},
          {"adjoint_l_star", number_or_null(a.outcome.l_star)},
          {"weak_coupling_ratio", number_or_null(a.ratio)},
          {"coupling_term", a.coupling},
          {"monotone_S", a.outcome.strictly_increasing},
          {"sign_changes", a.outcome.sign_changes},
          {"fixed_point",
           {{"converged", a.fixed_point.converged},
            {"l_star", a.fixed_point.l_star},
            {"iterations", a.fixed_point.history.size()},
            {"message", a.fixed_point.message}}}};
}

inline void write_adjoint_csv(const std::filesystem::path& path, const AdjointRun& a) {
  CsvWriter w(path, {"l", "lambda", "S"});
  for (std::size_t j = 0; j < a.adjoint.nodes.size(); ++j) {
    w.cell(a.adjoint.nodes[j]).cell(a.adjoint.lambda[j]).cell(a.outcome.S_values[j]);
    w.end_row();
  }
}

}  // namespace detail

/// Stationary adjoint under the threshold policy (default l* = lm):
/// adjoint.csv (l,lambda,S) and switching.json.
inline RunOutcome run_adjoint(const RunConfig& config, const RunOptions& opt) {
  RunOutcome out;
  auto ctx = detail::prepare(config, opt, out);
  if (!ctx) return out;
  auto run = detail::guarded(opt, [&](RunOutcome& o) {
    const double l_star = opt.threshold.value_or(config.params.lm);
    const auto a = detail::adjoint_at(*ctx, l_star);
    detail::write_adjoint_csv(opt.out_dir / "adjoint.csv", a);
    o.summary = detail::stamp(*ctx);
    o.summary.update(detail::adjoint_json(a, l_star));
    if (a.outcome.which == SwitchingCase::kNonMonotone) {
      o.messages.push_back("warning: switching function has no single increasing crossing");
      detail::log_line(opt, o.messages.back());
    }
    write_json(opt.out_dir / "switching.json", o.summary);
  });
  run.messages.insert(run.messages.begin(), out.messages.begin(), out.messages.end());
  return run;
}

/// Full reproduction bundle: every runner above into its own subdirectory,
/// the three representative threshold runs, the optimal-policy profile
/// comparison and a manifest.json listing every output.
inline RunOutcome run_report(const RunConfig& config, const RunOptions& opt) {
  RunOutcome out;
  auto ctx = detail::prepare(config, opt, out);
  if (!ctx) return out;

  json outputs = json::array();
  json failures = json::array();
  json headline = json::object();
  auto record = [&](const std::string& stage, const RunOutcome& r, const std::vector<std::string>& files,
                    const std::string& content) {
    for (const auto& f : files) outputs.push_back({{"file", stage + "/" + f}, {"content", content}});
    if (r.status != ExitStatus::kSuccess) {
      failures.push_back({{"stage", stage}, {"status", static_cast<int>(r.status)}, {"messages", r.messages}});
    }
  };
  auto sub = [&](const std::string& name) {
    RunOptions o = opt;
    o.out_dir = opt.out_dir / name;
    return o;
  };

  const auto steady = run_steady(config, sub("steady"));
  record("steady", steady, {"profile.csv", "closure_curve.csv", "steady.json"},
         "no-harvest stationary profile, closure curve, E*, N*, R(E*)");
  if (steady.status == ExitStatus::kSuccess) {
    for (const char* k : {"E_star", "N_star", "R_at_E_star", "dt"}) headline[k] = steady.summary[k];
  }

  const auto repl = run_replacement_curve(config, sub("replacement"));
  record("replacement", repl, {"replacement_curve.csv", "replacement_markers.csv", "replacement.json"},
         "replacement index curve R(E) and critical crowding");
  if (repl.status == ExitStatus::kSuccess) headline["E_crit"] = repl.summary["E_crit"];

  json table = json::array();
  for (double l : {40.0, 60.0, 80.0}) {
    RunOptions o = sub("simulate_l" + std::to_string(static_cast<int>(l)));
    o.threshold = l;
    const auto sim = run_simulate(config, o);
    record(o.out_dir.filename().string(), sim, {"trajectory.csv", "snapshot_0.csv", "snapshot_1.csv", "simulate.json"},
           "trajectory of E(t), N(t) and harvest value under a representative threshold");
    if (sim.status == ExitStatus::kSuccess) {
      table.push_back({{"l_star", l},
                       {"E_terminal", sim.summary["E_terminal"]},
                       {"N_terminal", sim.summary["N_terminal"]},
                       {"conv_time_E", sim.summary["conv_time_E"]},
                       {"conv_time_N", sim.summary["conv_time_N"]}});
    }
  }
  headline["representative_thresholds"] = table;

  const auto sweep = run_sweep(config, sub("sweep"));
  record("sweep", sweep, {"sweep.csv", "optimum.json"}, "revenue and terminal state per threshold, refined optimum");
  std::optional<double> l_opt;
  if (sweep.summary.contains("l_star_opt")) {
    l_opt = sweep.summary["l_star_opt"].get<double>();
    for (const char* k : {"l_star_opt", "J_T_opt", "R", "E", "N", "viable", "all_swept_viable"}) {
      headline[std::string("optimum_") + k] = sweep.summary[k];
    }
  }

  if (l_opt) {
    RunOptions o = sub("adjoint");
    o.threshold = *l_opt;
    const auto adj = run_adjoint(config, o);
    record("adjoint", adj, {"adjoint.csv", "switching.json"}, "stationary adjoint and switching function at the optimum");
    if (adj.status == ExitStatus::kSuccess) {
      headline["adjoint_case"] = adj.summary["case"];
      headline["adjoint_l_star"] = adj.summary["adjoint_l_star"];
      headline["weak_coupling_ratio"] = adj.summary["weak_coupling_ratio"];
    }

    RunOutcome cmp = detail::guarded(opt, [&](RunOutcome& o2) {
      const auto base = solve_steady_crowding(ctx->model, ctx->grid);
      const auto policy = make_threshold_policy(*l_opt, config.params.u_max, ctx->grid, config.threshold_mapping);
      const auto opt_state = solve_steady_crowding(ctx->model, ctx->grid, &policy);
      if (!base.ok || !opt_state.ok) {
        o2.status = ExitStatus::kNumericalFailure;
        o2.messages.push_back(base.ok ? opt_state.message : base.message);
        return;
      }
      std::filesystem::create_directories(opt.out_dir / "profiles");
      CsvWriter w(opt.out_dir / "profiles" / "profile_comparison.csv", {"l", "x_no_harvest", "x_optimal"});
      for (std::size_t j = 0; j < ctx->grid.n_nodes(); ++j) {
        w.cell(ctx->grid.edges[j]).cell(base.profile.profile[j]).cell(opt_state.profile.profile[j]);
        w.end_row();
      }
    });
    record("profiles", cmp, {"profile_comparison.csv"}, "stationary profiles without harvest and under the optimal threshold");
  }

  json manifest = detail::stamp(*ctx);
  manifest["config"] = to_json(config);
  manifest["config"].erase("output_dir");
  manifest["headline"] = headline;
  manifest["outputs"] = outputs;
  manifest["failures"] = failures;
  write_json(opt.out_dir / "manifest.json", manifest);

  out.summary = manifest;
  if (!failures.empty()) out.status = ExitStatus::kPartialReport;
  return out;
}

}  // namespace structured_harvest
