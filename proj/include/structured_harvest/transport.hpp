#pragma once

// Forward solver for the nonlocal size-structured transport equation
//
//   x_t + (g(E,l) x)_l = -(mu(E,l) + u(l)) x,   g(E,l0) x(t,l0) = p(t),
//   E(t) = int chi(l) x(t,l) dl,
//
// by first-order upwind finite volumes with explicit Euler time stepping.
// E is evaluated once from the pre-step state and frozen over the step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "structured_harvest/grid.hpp"
#include "structured_harvest/model.hpp"

namespace structured_harvest {

struct PopulationState {
  double t = 0.0;
  std::vector<double> density;  // cell averages (individuals/cm)
};

enum class ThresholdMapping {
  kCellAverage,  // cell containing l* is harvested in proportion to its part above l*
  kCellCenter,   // cell harvested at u_max iff its center exceeds l*
};

/// Minimum-size harvest rule: u = 0 below l*, u = u_max above it.
struct ThresholdPolicy {
  std::optional<double> l_star;  // empty: no harvest anywhere
  double u_max = 0.0;
  ThresholdMapping mapping = ThresholdMapping::kCellAverage;
  std::vector<double> realized;  // per-cell harvest mortality (1/yr)
  double effective_threshold = 0.0;

  bool harvests() const noexcept { return l_star.has_value() && u_max > 0.0; }

  /// Exact step function u(l); u(l*) = 0.
  double rate_at(double l) const noexcept {
    return (l_star && l > *l_star) ? u_max : 0.0;
  }
};

inline ThresholdPolicy make_threshold_policy(std::optional<double> l_star, double u_max,
                                             const SizeGrid& grid,
                                             ThresholdMapping mapping = ThresholdMapping::kCellAverage) {
  if (u_max < 0.0) throw std::invalid_argument("u_max must be non-negative");
  ThresholdPolicy policy;
  policy.l_star = l_star;
  policy.u_max = u_max;
  policy.mapping = mapping;
  policy.realized.assign(grid.n_cells, 0.0);
  policy.effective_threshold = grid.lm;
  if (!l_star) return policy;

  const double ls = *l_star;
  switch (mapping) {
    case ThresholdMapping::kCellAverage:
      for (std::size_t i = 0; i < grid.n_cells; ++i) {
        const double frac = std::clamp((grid.edges[i + 1] - ls) / grid.dl, 0.0, 1.0);
        policy.realized[i] = u_max * frac;
      }
      policy.effective_threshold = std::clamp(ls, grid.l0, grid.lm);
      break;
    case ThresholdMapping::kCellCenter: {
      bool first = true;
      for (std::size_t i = 0; i < grid.n_cells; ++i) {
        if (grid.centers[i] > ls) {
          policy.realized[i] = u_max;
          if (first) {
            policy.effective_threshold = grid.edges[i];
            first = false;
          }
        }
      }
      break;
    }
  }
  return policy;
}

inline ThresholdPolicy no_harvest_policy(const SizeGrid& grid) {
  return make_threshold_policy(std::nullopt, 0.0, grid);
}

struct Snapshot {
  double t = 0.0;
  std::vector<double> density;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> E_series;
  std::vector<double> N_series;
  std::vector<double> harvest_value_rate;  // int c(l) u(l) x(t,l) dl ($/yr)
  std::vector<Snapshot> snapshots;
  PopulationState final_state;
  double dt = 0.0;
  std::size_t steps = 0;
};

/// Thrown when an explicit update would give a cell a negative self-coefficient.
class CflViolation : public std::runtime_error {
 public:
  CflViolation(double dt, double g_max, std::size_t cell, double coefficient)
      : std::runtime_error(describe(dt, g_max, cell, coefficient)), dt_(dt), g_max_(g_max) {}

  double dt() const noexcept { return dt_; }
  double g_max() const noexcept { return g_max_; }

 private:
  static std::string describe(double dt, double g_max, std::size_t cell, double coefficient) {
    std::ostringstream os;
    os.precision(10);
    os << "CFL violation: dt=" << dt << " yr, max g=" << g_max << " cm/yr, cell " << cell
       << " update coefficient " << coefficient;
    return os.str();
  }
  double dt_;
  double g_max_;
};

// ---------------------------------------------------------------------------
// Diagnostics of a state

template <CoefficientModel M>
double crowding_index(const PopulationState& state, const SizeGrid& grid, const M& model) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.n_cells; ++i) sum += model.kernel(grid.centers[i]) * state.density[i];
  return sum * grid.dl;
}

inline double total_population(const PopulationState& state, const SizeGrid& grid) {
  return integrate_cells(state.density, grid);
}

template <CoefficientModel M>
double harvest_value_rate(const PopulationState& state, const ThresholdPolicy& policy,
                          const SizeGrid& grid, const M& model) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    if (policy.realized[i] != 0.0) {
      sum += model.price(grid.centers[i]) * policy.realized[i] * state.density[i];
    }
  }
  return sum * grid.dl;
}

/// x(t, l0) such that the inflow flux g(E, l0) x equals p_t.
template <CoefficientModel M>
double boundary_density(const M& model, double E, double p_t) {
  if (E < 0.0 || p_t < 0.0) throw std::domain_error("boundary_density needs E >= 0 and p >= 0");
  return p_t / model.growth(E, model.params().l0);
}

// ---------------------------------------------------------------------------
// Time stepping

namespace detail {

/// One upwind step from `in` into `out` (sized like `in`). Returns E used.
template <CoefficientModel M>
double advance(const PopulationState& in, PopulationState& out, double dt, double inflow,
               const ThresholdPolicy& policy, const M& model, const SizeGrid& grid) {
  const std::size_t n = grid.n_cells;
  const double E = crowding_index(in, grid, model);
  const double ratio = dt / grid.dl;

  double flux_in = inflow;
  for (std::size_t i = 0; i < n; ++i) {
    const double g_right = model.growth(E, grid.edges[i + 1]);
    const double loss = model.mortality(E, grid.centers[i]) + policy.realized[i];
    const double self = 1.0 - ratio * g_right - dt * loss;
    if (self < 0.0) {
      double g_max = 0.0;
      for (double l : grid.edges) g_max = std::max(g_max, model.growth(E, l));
      throw CflViolation(dt, g_max, i, self);
    }
    const double x = in.density[i];
    out.density[i] = self * x + ratio * flux_in;
    flux_in = g_right * x;
  }
  out.t = in.t + dt;
  return E;
}

}  // namespace detail

/// Explicit upwind update over dt. The inflow flux defaults to the constant p.
template <CoefficientModel M>
PopulationState step(const PopulationState& state, double dt, const ThresholdPolicy& policy,
                     const M& model, const SizeGrid& grid, std::optional<double> inflow = std::nullopt) {
  if (state.density.size() != grid.n_cells || policy.realized.size() != grid.n_cells) {
    throw std::invalid_argument("step: state/policy size does not match grid");
  }
  PopulationState out{0.0, std::vector<double>(grid.n_cells)};
  detail::advance(state, out, dt, inflow.value_or(model.params().p), policy, model, grid);
  return out;
}

struct SimulationOptions {
  double cfl_safety = 0.8;
  std::optional<double> dt;           // overrides the CFL step
  std::vector<double> snapshot_times;
  std::function<double(double)> inflow;  // p(t); constant params().p when empty
};

/// Integrates from `initial` to `horizon` with a constant step (the last one
/// shortened to land on the horizon) and records E, N and the harvest value
/// rate at every step start and at the end.
template <CoefficientModel M>
TrajectoryRecord simulate(const PopulationState& initial, const ThresholdPolicy& policy,
                          const M& model, const SizeGrid& grid, double horizon,
                          const SimulationOptions& options = {}) {
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
  if (initial.density.size() != grid.n_cells || policy.realized.size() != grid.n_cells) {
    throw std::invalid_argument("simulate: state/policy size does not match grid");
  }
  const double dt = options.dt.value_or(cfl_timestep(model, grid, options.cfl_safety));
  const double t_end = initial.t + horizon;
  // Round-off guard so the step count does not pick up a sliver step.
  const double t_eps = 1e-9 * dt;

  TrajectoryRecord rec;
  rec.dt = dt;
  const std::size_t expected = static_cast<std::size_t>(std::ceil(horizon / dt)) + 2;
  rec.times.reserve(expected);
  rec.E_series.reserve(expected);
  rec.N_series.reserve(expected);
  rec.harvest_value_rate.reserve(expected);

  std::vector<double> pending = options.snapshot_times;
  std::sort(pending.begin(), pending.end());
  std::size_t next_snapshot = 0;

  PopulationState cur = initial;
  PopulationState nxt{0.0, std::vector<double>(grid.n_cells)};

  auto record = [&](const PopulationState& s) {
    rec.times.push_back(s.t);
    rec.E_series.push_back(crowding_index(s, grid, model));
    rec.N_series.push_back(total_population(s, grid));
    rec.harvest_value_rate.push_back(harvest_value_rate(s, policy, grid, model));
    while (next_snapshot < pending.size() && s.t >= pending[next_snapshot] - t_eps) {
      rec.snapshots.push_back({s.t, s.density});
      ++next_snapshot;
    }
  };

  std::size_t k = 0;
  while (true) {
    const double t = initial.t + dt * static_cast<double>(k);
    cur.t = t;
    record(cur);
    if (t >= t_end - t_eps) break;
    const double h = std::min(dt, t_end - t);
    const double p_t = options.inflow ? options.inflow(t) : model.params().p;
    detail::advance(cur, nxt, h, p_t, policy, model, grid);
    std::swap(cur, nxt);
    ++k;
    if (h < dt) {
      cur.t = t_end;
      record(cur);
      break;
    }
  }
  rec.steps = k;
  rec.final_state = std::move(cur);
  // Requested times past the horizon snap to the final state.
  while (next_snapshot < pending.size()) {
    rec.snapshots.push_back({rec.final_state.t, rec.final_state.density});
    ++next_snapshot;
  }
  return rec;
}

/// Earliest sample time after which the series stays within
/// tolerance * |terminal| of its terminal value. Empty when only the terminal
/// sample itself qualifies.
inline std::optional<double> convergence_time(std::span<const double> times,
                                              std::span<const double> series, double tolerance) {
  if (series.empty() || times.size() != series.size()) {
    throw std::invalid_argument("convergence_time: empty or mismatched series");
  }
  const double terminal = series.back();
  const double band = tolerance * std::abs(terminal);
  std::size_t first_inside = series.size();
  for (std::size_t k = series.size(); k-- > 0;) {
    if (std::abs(series[k] - terminal) > band) break;
    first_inside = k;
  }
  if (first_inside + 1 >= series.size() && series.size() > 1) return std::nullopt;
  return times[first_inside];
}

struct ConvergenceTimes {
  std::optional<double> E;
  std::optional<double> N;
};

inline ConvergenceTimes convergence_times(const TrajectoryRecord& rec, double tolerance = 0.01) {
  return {convergence_time(rec.times, rec.E_series, tolerance),
          convergence_time(rec.times, rec.N_series, tolerance)};
}

}  // namespace structured_harvest
