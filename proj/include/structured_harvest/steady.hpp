#pragma once

// Stationary regime: closed-form profiles at fixed crowding and the scalar
// closure F(E) = E - int chi(l) x(l; E) dl = 0.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "structured_harvest/grid.hpp"
#include "structured_harvest/model.hpp"
#include "structured_harvest/search.hpp"
#include "structured_harvest/transport.hpp"

namespace structured_harvest {

struct StationaryProfile {
  double E = 0.0;
  std::vector<double> nodes;    // grid edges (cm)
  std::vector<double> profile;  // x at nodes (individuals/cm)
  double N = 0.0;
  std::optional<ThresholdPolicy> policy;

  /// Cell averages of the node profile (trapezoid), for comparison with FV states.
  std::vector<double> cell_averages() const {
    std::vector<double> out(profile.size() - 1);
    for (std::size_t i = 0; i + 1 < profile.size(); ++i) out[i] = 0.5 * (profile[i] + profile[i + 1]);
    return out;
  }
};

/// Cumulative hazard int_{l0}^{l_j} (mu(E,s) + u(s)) / g(E,s) ds at every node,
/// trapezoid on the node mesh. The harvest step is split exactly at l*.
template <CoefficientModel M>
std::vector<double> cumulative_hazard(const M& model, double E, const SizeGrid& grid,
                                      const ThresholdPolicy* policy = nullptr) {
  const std::size_t nn = grid.n_nodes();
  std::vector<double> H(nn, 0.0);
  const bool harvest = policy != nullptr && policy->harvests();
  const double l_star = harvest ? *policy->l_star : grid.lm;
  const double u_max = harvest ? policy->u_max : 0.0;

  double prev = model.mortality(E, grid.edges[0]) / model.growth(E, grid.edges[0]);
  for (std::size_t j = 1; j < nn; ++j) {
    const double a = grid.edges[j - 1];
    const double b = grid.edges[j];
    const double g_b = model.growth(E, b);
    const double cur = model.mortality(E, b) / g_b;
    double inc = 0.5 * (prev + cur) * (b - a);
    if (harvest && b > l_star) {
      const double s = std::max(a, l_star);
      inc += u_max * 0.5 * (1.0 / model.growth(E, s) + 1.0 / g_b) * (b - s);
    }
    H[j] = H[j - 1] + inc;
    prev = cur;
  }
  return H;
}

template <CoefficientModel M>
StationaryProfile stationary_profile(const M& model, double E, const SizeGrid& grid,
                                     const ThresholdPolicy* policy = nullptr) {
  if (!(E >= 0.0)) throw std::domain_error("stationary_profile: E must be non-negative");
  const double p = model.params().p;
  const auto H = cumulative_hazard(model, E, grid, policy);

  StationaryProfile out;
  out.E = E;
  out.nodes = grid.edges;
  out.profile.resize(grid.n_nodes());
  for (std::size_t j = 0; j < grid.n_nodes(); ++j) {
    out.profile[j] = p / model.growth(E, grid.edges[j]) * std::exp(-H[j]);
  }
  out.N = integrate_nodes(out.profile, grid.dl);
  if (policy != nullptr) out.policy = *policy;
  return out;
}

namespace detail {

template <CoefficientModel M>
double weighted_mass(const M& model, const StationaryProfile& prof, const SizeGrid& grid) {
  std::vector<double> w(prof.profile.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = model.kernel(grid.edges[j]) * prof.profile[j];
  return integrate_nodes(w, grid.dl);
}

}  // namespace detail

/// F(E) = E - G(E); G by Simpson on the node mesh.
template <CoefficientModel M>
double closure_residual(const M& model, double E, const SizeGrid& grid,
                        const ThresholdPolicy* policy = nullptr) {
  const auto prof = stationary_profile(model, E, grid, policy);
  return E - detail::weighted_mass(model, prof, grid);
}

struct SteadySolution {
  bool ok = false;
  double E = 0.0;
  StationaryProfile profile;
  RootResult root;
  double bound = 0.0;  // crowding upper bound C used for the bracket
  std::string message;
};

namespace detail {

/// Brackets the closure root on [0, C], doubling C while F(C) <= 0.
/// Density-dependent growth can push G(C) above the E = 0 bound.
template <class F>
RootResult bracketed_closure_root(F&& residual, double bound, double abs_tol) {
  constexpr int kMaxExpansions = 60;
  double hi = bound;
  RootResult res;
  for (int k = 0; k <= kMaxExpansions; ++k) {
    res = find_root(residual, 0.0, hi, abs_tol);
    if (res.bracketed || res.f_lo >= 0.0) return res;
    hi *= 2.0;
  }
  return res;
}

inline std::string bracket_message(const RootResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "closure bracket [" << r.lo << ", " << r.hi << "] has no sign change: F(lo)=" << r.f_lo
     << ", F(hi)=" << r.f_hi;
  return os.str();
}

}  // namespace detail

/// Stationary crowding E* with its profile. A p = 0 inflow gives E* = 0.
template <CoefficientModel M>
SteadySolution solve_steady_crowding(const M& model, const SizeGrid& grid,
                                     const ThresholdPolicy* policy = nullptr) {
  SteadySolution sol;
  sol.bound = crowding_upper_bound(model, grid);
  if (model.params().p == 0.0) {
    sol.ok = true;
    sol.E = 0.0;
    sol.profile = stationary_profile(model, 0.0, grid, policy);
    sol.message = "zero inflow: empty stationary profile";
    return sol;
  }
  auto residual = [&](double E) { return closure_residual(model, E, grid, policy); };
  sol.root = detail::bracketed_closure_root(residual, sol.bound, 1e-6 * sol.bound);
  if (!sol.root.bracketed) {
    sol.message = detail::bracket_message(sol.root);
    return sol;
  }
  sol.ok = true;
  sol.E = sol.root.root;
  sol.profile = stationary_profile(model, sol.E, grid, policy);
  return sol;
}

// ---------------------------------------------------------------------------
// Discrete fixed point of the upwind scheme

/// Cell densities that the upwind update leaves unchanged at crowding E:
/// x_i = F_{i-1/2} / (g(E, l_{i+1}) + dl (mu_i + u_i)), F_{1/2} = p.
template <CoefficientModel M>
PopulationState discrete_stationary_state(const M& model, double E, const SizeGrid& grid,
                                          const ThresholdPolicy& policy) {
  PopulationState s{0.0, std::vector<double>(grid.n_cells)};
  double flux = model.params().p;
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    const double g_right = model.growth(E, grid.edges[i + 1]);
    const double loss = model.mortality(E, grid.centers[i]) + policy.realized[i];
    s.density[i] = flux / (g_right + grid.dl * loss);
    flux = g_right * s.density[i];
  }
  return s;
}

struct DiscreteSteadyState {
  bool ok = false;
  double E = 0.0;
  PopulationState state;
  std::string message;
};

/// Self-consistent discrete fixed point: E equals the crowding index of the
/// cell densities it generates.
template <CoefficientModel M>
DiscreteSteadyState solve_discrete_steady_state(const M& model, const SizeGrid& grid,
                                                const ThresholdPolicy& policy) {
  DiscreteSteadyState out;
  auto residual = [&](double E) {
    return E - crowding_index(discrete_stationary_state(model, E, grid, policy), grid, model);
  };
  const double bound = crowding_upper_bound(model, grid);
  if (model.params().p == 0.0) {
    out.ok = true;
    out.state = discrete_stationary_state(model, 0.0, grid, policy);
    return out;
  }
  const RootResult root = detail::bracketed_closure_root(residual, bound, 1e-10 * bound);
  if (!root.bracketed) {
    out.message = detail::bracket_message(root);
    return out;
  }
  out.ok = true;
  out.E = root.root;
  out.state = discrete_stationary_state(model, out.E, grid, policy);
  return out;
}

}  // namespace structured_harvest
