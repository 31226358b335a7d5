#pragma once

// Stationary reduced adjoint and the threshold structure of the harvest rule.
//
// With the nonlocal crowding term dropped, the stationary shadow value solves
//
//   -g(E,l) lambda'(l) = c(l) u(l) - (r + mu(E,l) + u(l)) lambda(l),  lambda(l_m) = 0,
//
// and the harvest decision follows the sign of S(l) = c(l) - lambda(l).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "structured_harvest/grid.hpp"
#include "structured_harvest/model.hpp"
#include "structured_harvest/steady.hpp"
#include "structured_harvest/transport.hpp"

namespace structured_harvest {

struct AdjointProfile {
  double E = 0.0;
  std::vector<double> nodes;
  std::vector<double> lambda;  // $/individual at nodes; lambda.back() == 0
  ThresholdPolicy policy;
};

namespace detail {

// Exact solution of lambda' = a lambda - b with frozen a, b, marched from the
// right end of an interval of width w to its left end.
inline double integrating_factor_step(double lambda_right, double a, double b, double w) {
  const double steady = b / a;
  return steady + (lambda_right - steady) * std::exp(-a * w);
}

}  // namespace detail

/// Backward march from lambda(l_m) = 0, one integrating-factor step per cell
/// with coefficients at the sub-interval midpoint. A cell containing l* is
/// split there so the harvest switch is resolved exactly.
template <CoefficientModel M>
AdjointProfile solve_stationary_adjoint(const M& model, double E, const ThresholdPolicy& policy,
                                        const SizeGrid& grid) {
  if (!(E >= 0.0)) throw std::domain_error("solve_stationary_adjoint: E must be non-negative");
  const double r = model.params().r;
  const std::size_t nn = grid.n_nodes();

  AdjointProfile out;
  out.E = E;
  out.nodes = grid.edges;
  out.lambda.assign(nn, 0.0);
  out.policy = policy;

  auto advance = [&](double lam, double left, double right, double u) {
    const double mid = 0.5 * (left + right);
    const double g = model.growth(E, mid);
    const double a = (r + model.mortality(E, mid) + u) / g;
    const double b = model.price(mid) * u / g;
    return detail::integrating_factor_step(lam, a, b, right - left);
  };

  const bool harvest = policy.harvests();
  const double l_star = harvest ? *policy.l_star : grid.lm;
  for (std::size_t j = nn - 1; j-- > 0;) {
    const double left = grid.edges[j];
    const double right = grid.edges[j + 1];
    double lam = out.lambda[j + 1];
    if (harvest && l_star > left && l_star < right) {
      lam = advance(lam, l_star, right, policy.u_max);
      lam = advance(lam, left, l_star, 0.0);
    } else {
      const double u = (harvest && left >= l_star) ? policy.u_max : 0.0;
      lam = advance(lam, left, right, u);
    }
    out.lambda[j] = lam;
  }
  out.lambda.back() = 0.0;
  return out;
}

/// S(l) = c(l) - lambda(l) at the nodes.
template <CoefficientModel M>
std::vector<double> switching_function(const AdjointProfile& adjoint, const M& model) {
  std::vector<double> S(adjoint.nodes.size());
  for (std::size_t j = 0; j < S.size(); ++j) S[j] = model.price(adjoint.nodes[j]) - adjoint.lambda[j];
  return S;
}

enum class SwitchingCase { kAllProtect, kAllHarvest, kThreshold, kNonMonotone };

inline const char* to_string(SwitchingCase c) {
  switch (c) {
    case SwitchingCase::kAllProtect: return "all-protect";
    case SwitchingCase::kAllHarvest: return "all-harvest";
    case SwitchingCase::kThreshold: return "threshold";
    case SwitchingCase::kNonMonotone: return "non-monotone switching";
  }
  return "unknown";
}

struct SwitchingOutcome {
  SwitchingCase which = SwitchingCase::kNonMonotone;
  std::optional<double> l_star;
  std::vector<double> S_values;
  std::size_t sign_changes = 0;
  bool strictly_increasing = false;
};

/// Classifies S by its sign pattern. A single negative-to-positive crossing
/// gives a threshold at the linear-interpolation zero; anything else that is
/// neither all-negative nor all-positive is reported as non-monotone.
inline SwitchingOutcome extract_threshold(std::vector<double> S, const std::vector<double>& nodes) {
  if (S.size() != nodes.size() || S.size() < 2) {
    throw std::invalid_argument("extract_threshold: S must be sampled on all nodes");
  }
  SwitchingOutcome out;
  out.strictly_increasing = std::adjacent_find(S.begin(), S.end(), std::greater_equal<>()) == S.end();

  // Exact zeros carry no sign; a crossing is between consecutive non-zero samples.
  std::size_t last_nonzero = 0;
  std::size_t crossing = 0;
  std::size_t before_crossing = 0;
  int last_sign = 0;
  bool rising = false;
  bool any_negative = false;
  bool any_positive = false;
  for (std::size_t j = 0; j < S.size(); ++j) {
    const int sign = (S[j] > 0.0) - (S[j] < 0.0);
    any_negative |= sign < 0;
    any_positive |= sign > 0;
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) {
      ++out.sign_changes;
      crossing = j;
      before_crossing = last_nonzero;
      rising = sign > 0;
    }
    last_sign = sign;
    last_nonzero = j;
  }

  if (!any_positive && any_negative) {
    out.which = SwitchingCase::kAllProtect;
  } else if (any_positive && !any_negative) {
    out.which = SwitchingCase::kAllHarvest;
  } else if (out.sign_changes == 1 && rising) {
    out.which = SwitchingCase::kThreshold;
    const std::size_t lo = before_crossing;
    if (lo + 1 < crossing) {
      out.l_star = nodes[lo + 1];  // first exact zero
    } else {
      const double s0 = S[lo];
      const double s1 = S[crossing];
      out.l_star = nodes[lo] + (nodes[crossing] - nodes[lo]) * (-s0) / (s1 - s0);
    }
  } else {
    out.which = SwitchingCase::kNonMonotone;
  }
  out.S_values = std::move(S);
  return out;
}

namespace detail {

// lambda' at nodes: backward differences, forward difference at the first node.
inline std::vector<double> adjoint_slope(const AdjointProfile& adj) {
  const std::size_t nn = adj.lambda.size();
  std::vector<double> d(nn);
  for (std::size_t j = 1; j < nn; ++j) {
    d[j] = (adj.lambda[j] - adj.lambda[j - 1]) / (adj.nodes[j] - adj.nodes[j - 1]);
  }
  d[0] = d.size() > 1 ? d[1] : 0.0;
  return d;
}

}  // namespace detail

/// Environment coupling factor
///   C = int x(s) [lambda'(s) dg/dE(E,s) - lambda(s) dmu/dE(E,s)] ds
/// that the reduced adjoint drops.
template <CoefficientModel M>
double nonlocal_coupling_term(const StationaryProfile& state, const AdjointProfile& adjoint,
                              const M& model, const SizeGrid& grid) {
  const double E = state.E;
  const auto slope = detail::adjoint_slope(adjoint);
  std::vector<double> integrand(grid.n_nodes());
  for (std::size_t j = 0; j < integrand.size(); ++j) {
    const double l = grid.edges[j];
    integrand[j] = state.profile[j] *
                   (slope[j] * model.growth_dE(E, l) - adjoint.lambda[j] * model.mortality_dE(E, l));
  }
  return integrate_nodes(integrand, grid.dl);
}

/// max_l |chi(l) C| over max_l |(r + mu + u) lambda - c u|. Empty when the
/// leading terms vanish identically.
template <CoefficientModel M>
std::optional<double> weak_coupling_ratio(const StationaryProfile& state, const AdjointProfile& adjoint,
                                          const M& model, const SizeGrid& grid) {
  const double C = nonlocal_coupling_term(state, adjoint, model, grid);
  const double r = model.params().r;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < grid.n_nodes(); ++j) {
    const double l = grid.edges[j];
    const double u = adjoint.policy.rate_at(l);
    num = std::max(num, std::abs(model.kernel(l) * C));
    den = std::max(den, std::abs((r + model.mortality(state.E, l) + u) * adjoint.lambda[j] - model.price(l) * u));
  }
  if (den == 0.0) return std::nullopt;
  return num / den;
}

// ---------------------------------------------------------------------------
// Threshold -> steady state -> adjoint -> threshold iteration

struct FixedPointStep {
  double l_star_in = 0.0;
  double E = 0.0;
  SwitchingCase which = SwitchingCase::kNonMonotone;
  std::optional<double> l_star_out;
};

struct FixedPointResult {
  bool converged = false;
  double l_star = 0.0;
  std::vector<FixedPointStep> history;
  std::string message;
};

/// Damped iteration l <- (1 - damping) l + damping l_adjoint. Stops on a
/// change below `tolerance`, on a non-threshold outcome or a failed closure.
template <CoefficientModel M>
FixedPointResult adjoint_fixed_point(const M& model, const SizeGrid& grid, double l_start,
                                     double damping = 0.5, int max_iterations = 50,
                                     double tolerance = 1e-3) {
  FixedPointResult res;
  double l = l_start;
  for (int it = 0; it < max_iterations; ++it) {
    const auto policy = make_threshold_policy(l, model.params().u_max, grid);
    const auto steady = solve_steady_crowding(model, grid, &policy);
    FixedPointStep step{l, steady.E, SwitchingCase::kNonMonotone, std::nullopt};
    if (!steady.ok) {
      res.history.push_back(step);
      res.message = steady.message;
      break;
    }
    const auto adj = solve_stationary_adjoint(model, steady.E, policy, grid);
    const auto outcome = extract_threshold(switching_function(adj, model), adj.nodes);
    step.which = outcome.which;
    step.l_star_out = outcome.l_star;
    res.history.push_back(step);
    if (outcome.which != SwitchingCase::kThreshold) {
      res.message = std::string("adjoint switching case: ") + to_string(outcome.which);
      break;
    }
    const double next = (1.0 - damping) * l + damping * *outcome.l_star;
    if (std::abs(next - l) < tolerance) {
      res.converged = true;
      l = next;
      break;
    }
    l = next;
  }
  res.l_star = l;
  if (!res.converged && res.message.empty()) res.message = "iteration limit reached";
  return res;
}

}  // namespace structured_harvest
