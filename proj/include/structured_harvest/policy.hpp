#pragma once

// Discounted revenue of threshold policies and the threshold optimizer.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "structured_harvest/grid.hpp"
#include "structured_harvest/model.hpp"
#include "structured_harvest/replacement.hpp"
#include "structured_harvest/search.hpp"
#include "structured_harvest/steady.hpp"
#include "structured_harvest/transport.hpp"

namespace structured_harvest {

/// J_T = sum_k exp(-r t_k) H(t_k) (t_{k+1} - t_k), left endpoints.
template <CoefficientModel M>
double discounted_revenue(const TrajectoryRecord& rec, const M& model) {
  const double r = model.params().r;
  double J = 0.0;
  for (std::size_t k = 0; k + 1 < rec.times.size(); ++k) {
    const double t = rec.times[k];
    J += std::exp(-r * t) * rec.harvest_value_rate[k] * (rec.times[k + 1] - t);
  }
  return J;
}

struct PolicyEvaluation {
  double l_star = 0.0;
  double J_T = 0.0;
  double E_terminal = 0.0;
  double N_terminal = 0.0;
  double R_terminal = 0.0;
  bool viable = false;
  ConvergenceTimes convergence;
  std::string error;  // non-empty when the run failed

  bool ok() const noexcept { return error.empty(); }
};

/// Everything a threshold evaluation shares across candidates.
struct EvaluationSetup {
  PopulationState initial;
  double horizon = 0.0;
  SimulationOptions simulation;
  ThresholdMapping mapping = ThresholdMapping::kCellAverage;
  double convergence_tolerance = 0.01;
};

/// Default setup: start from the discrete no-harvest stationary state and run
/// over the model horizon T.
template <CoefficientModel M>
EvaluationSetup default_evaluation_setup(const M& model, const SizeGrid& grid) {
  EvaluationSetup setup;
  const auto steady = solve_discrete_steady_state(model, grid, no_harvest_policy(grid));
  if (!steady.ok) throw std::runtime_error(steady.message);
  setup.initial = steady.state;
  setup.horizon = model.params().T;
  return setup;
}

template <CoefficientModel M>
PolicyEvaluation evaluate_threshold(double l_star, const M& model, const SizeGrid& grid,
                                    const EvaluationSetup& setup, TrajectoryRecord* record_out = nullptr) {
  if (!(l_star >= grid.l0 && l_star <= grid.lm)) {
    throw std::domain_error("evaluate_threshold: l* outside [l0, lm]");
  }
  PolicyEvaluation ev;
  ev.l_star = l_star;
  const auto policy = make_threshold_policy(l_star, model.params().u_max, grid, setup.mapping);
  auto rec = simulate(setup.initial, policy, model, grid, setup.horizon, setup.simulation);
  ev.J_T = discounted_revenue(rec, model);
  ev.E_terminal = rec.E_series.back();
  ev.N_terminal = rec.N_series.back();
  const auto viability = assess_viability(model, ev.E_terminal, grid);
  ev.R_terminal = viability.R;
  ev.viable = viability.viable;
  ev.convergence = convergence_times(rec, setup.convergence_tolerance);
  if (record_out != nullptr) *record_out = std::move(rec);
  return ev;
}

struct SweepResult {
  std::vector<PolicyEvaluation> evaluations;  // in l_grid order
  std::optional<std::size_t> argmax;          // index of the best successful row
  bool argmax_at_boundary = false;
};

inline std::optional<std::size_t> revenue_argmax(const std::vector<PolicyEvaluation>& evals) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (!evals[i].ok()) continue;
    // >= so ties go to the later, larger threshold.
    if (!best || evals[i].J_T >= evals[*best].J_T) best = i;
  }
  return best;
}

/// Evaluates every candidate, optionally on `jobs` worker threads. Rows are
/// written by index so the table does not depend on scheduling.
template <CoefficientModel M>
SweepResult sweep_thresholds(const std::vector<double>& l_grid, const M& model, const SizeGrid& grid,
                             const EvaluationSetup& setup, unsigned jobs = 1) {
  if (l_grid.empty()) throw std::invalid_argument("sweep_thresholds: empty threshold grid");
  if (!std::is_sorted(l_grid.begin(), l_grid.end())) {
    throw std::invalid_argument("sweep_thresholds: threshold grid must be sorted");
  }
  SweepResult out;
  out.evaluations.resize(l_grid.size());

  auto run_one = [&](std::size_t i) {
    try {
      out.evaluations[i] = evaluate_threshold(l_grid[i], model, grid, setup);
    } catch (const std::exception& e) {
      out.evaluations[i] = PolicyEvaluation{};
      out.evaluations[i].l_star = l_grid[i];
      out.evaluations[i].error = e.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(l_grid.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < l_grid.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < l_grid.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  out.argmax = revenue_argmax(out.evaluations);
  if (out.argmax && l_grid.size() > 1) {
    out.argmax_at_boundary = *out.argmax == 0 || *out.argmax + 1 == l_grid.size();
  }
  return out;
}

/// lo, lo + spacing, ..., up to hi (hi included when it lands on the lattice).
inline std::vector<double> threshold_lattice(double lo, double hi, double spacing) {
  if (!(spacing > 0.0) || !(lo <= hi)) throw std::invalid_argument("threshold_lattice: bad bounds");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / spacing + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) out.push_back(lo + spacing * static_cast<double>(k));
  if (hi - out.back() > 1e-9 * spacing) out.push_back(hi);
  return out;
}

struct RefinedOptimum {
  GoldenStatus status = GoldenStatus::kConverged;
  double l_star = 0.0;
  PolicyEvaluation evaluation;
  std::vector<std::string> warnings;
};

/// Golden-section search for the revenue maximum between the sweep neighbours
/// of the coarse argmax, down to `width` cm.
template <CoefficientModel M>
RefinedOptimum refine_optimum(const SweepResult& sweep, const std::vector<double>& l_grid, const M& model,
                              const SizeGrid& grid, const EvaluationSetup& setup, double width = 0.05) {
  RefinedOptimum out;
  if (!sweep.argmax) throw std::runtime_error("refine_optimum: sweep has no successful candidate");
  const std::size_t i = *sweep.argmax;
  if (sweep.argmax_at_boundary) out.warnings.push_back("optimum at the boundary of the threshold grid");
  if (l_grid.size() == 1) {
    out.l_star = l_grid[0];
    out.evaluation = sweep.evaluations[0];
    return out;
  }
  const double lo = l_grid[i == 0 ? 0 : i - 1];
  const double hi = l_grid[std::min(i + 1, l_grid.size() - 1)];

  auto objective = [&](double l) { return evaluate_threshold(l, model, grid, setup).J_T; };
  const auto g = golden_section_maximize(objective, lo, hi, width, l_grid[i]);
  out.status = g.status;
  out.l_star = g.x;
  if (g.status == GoldenStatus::kNonUnimodal) {
    out.warnings.push_back("revenue not unimodal around the coarse optimum; keeping the sweep argmax");
  } else if (g.status == GoldenStatus::kFlat) {
    out.warnings.push_back("revenue flat on the refinement bracket; returning its midpoint");
  }
  out.evaluation = evaluate_threshold(out.l_star, model, grid, setup);
  // The sweep point can beat interior probes when the maximum sits on a bracket end.
  if (sweep.evaluations[i].J_T > out.evaluation.J_T) {
    out.l_star = l_grid[i];
    out.evaluation = sweep.evaluations[i];
  }
  return out;
}

struct ViabilityPartition {
  std::vector<PolicyEvaluation> viable;
  std::vector<PolicyEvaluation> non_viable;
  std::optional<bool> argmax_viable;
};

inline ViabilityPartition viability_filter(const std::vector<PolicyEvaluation>& evals,
                                           std::optional<std::size_t> argmax = std::nullopt) {
  ViabilityPartition out;
  for (const auto& ev : evals) (ev.viable ? out.viable : out.non_viable).push_back(ev);
  if (argmax && *argmax < evals.size()) out.argmax_viable = evals[*argmax].viable;
  return out;
}

}  // namespace structured_harvest
