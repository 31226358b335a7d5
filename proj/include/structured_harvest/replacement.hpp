#pragma once

// Intrinsic replacement index
//
//   R(E) = int m(l) / g(E,l) * exp(-int_{l0}^{l} mu(E,s)/g(E,s) ds) dl,
//
// the expected lifetime recruitment contribution of an entrant at crowding E.
// R >= 1 is used as a viability target; with exogenous inflow it is not a
// persistence threshold.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "structured_harvest/grid.hpp"
#include "structured_harvest/model.hpp"
#include "structured_harvest/search.hpp"

namespace structured_harvest {

struct ViabilityReport {
  double E = 0.0;
  double R = 0.0;
  bool viable = false;  // R >= 1
};

/// exp(-int_{l0}^{l} mu/g) with the trapezoid rule on the grid nodes; the
/// final partial interval ends exactly at l.
template <CoefficientModel M>
double survival_probability(const M& model, double E, double l, const SizeGrid& grid) {
  if (!(E >= 0.0)) throw std::domain_error("survival_probability: E must be non-negative");
  if (!(l >= grid.l0 && l <= grid.lm)) throw std::domain_error("survival_probability: l outside grid");
  auto hazard = [&](double s) { return model.mortality(E, s) / model.growth(E, s); };
  double H = 0.0;
  double a = grid.edges[0];
  double ha = hazard(a);
  for (std::size_t j = 1; j < grid.n_nodes() && a < l; ++j) {
    const double b = std::min(grid.edges[j], l);
    const double hb = hazard(b);
    H += 0.5 * (ha + hb) * (b - a);
    a = b;
    ha = hb;
  }
  return std::exp(-H);
}

namespace detail {

// Simpson over [a, b] on roughly `spacing`-wide intervals of the integrand
// f(l) * survival(l), carrying the cumulative hazard H in from the left.
template <CoefficientModel M, class Weight>
double survival_weighted_segment(const M& model, double E, double a, double b, double spacing,
                                 Weight&& weight, double& H) {
  std::size_t intervals = static_cast<std::size_t>(std::ceil((b - a) / spacing - 1e-9));
  if (intervals < 2) intervals = 2;
  if (intervals % 2 == 1) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);

  auto hazard = [&](double s) { return model.mortality(E, s) / model.growth(E, s); };
  std::vector<double> f(intervals + 1);
  double prev_h = hazard(a);
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double l = (k == intervals) ? b : a + h * static_cast<double>(k);
    if (k > 0) {
      const double cur_h = hazard(l);
      H += 0.5 * (prev_h + cur_h) * h;
      prev_h = cur_h;
    }
    f[k] = weight(l, k == intervals) / model.growth(E, l) * std::exp(-H);
  }
  return simpson_samples(f, h);
}

}  // namespace detail

/// Composite Simpson on a mesh of the grid's spacing, split at l_mat so the
/// fertility jump falls on a node.
template <CoefficientModel M>
double replacement_index(const M& model, double E, const SizeGrid& grid) {
  if (!(E >= 0.0)) throw std::domain_error("replacement_index: E must be non-negative");
  const double l_mat = model.params().l_mat;
  double H = 0.0;
  if (!(l_mat > grid.l0 && l_mat < grid.lm)) {
    auto m = [&](double l, bool) { return model.fertility(l); };
    return detail::survival_weighted_segment(model, E, grid.l0, grid.lm, grid.dl, m, H);
  }
  // Left of the split the fertility takes its left limit at l_mat.
  const double below = std::nextafter(l_mat, grid.l0);
  auto m_left = [&](double l, bool at_end) { return model.fertility(at_end ? below : l); };
  auto m_right = [&](double l, bool) { return model.fertility(l); };
  const double left = detail::survival_weighted_segment(model, E, grid.l0, l_mat, grid.dl, m_left, H);
  const double right = detail::survival_weighted_segment(model, E, l_mat, grid.lm, grid.dl, m_right, H);
  return left + right;
}

template <CoefficientModel M>
ViabilityReport assess_viability(const M& model, double E, const SizeGrid& grid) {
  const double R = replacement_index(model, E, grid);
  return {E, R, R >= 1.0};
}

enum class CriticalStatus { kFound, kNeverViable, kNoCrossing };

struct CriticalCrowding {
  CriticalStatus status = CriticalStatus::kNoCrossing;
  std::optional<double> E_crit;
  double R_at_zero = 0.0;
};

/// Crowding level where R(E) = 1, searched upward from E = 0. The initial
/// upper end is `bracket_hint` or the stationary crowding bound, doubled
/// until R drops below one.
template <CoefficientModel M>
CriticalCrowding critical_crowding(const M& model, const SizeGrid& grid,
                                   std::optional<double> bracket_hint = std::nullopt) {
  constexpr int kMaxExpansions = 60;
  CriticalCrowding out;
  auto f = [&](double E) { return replacement_index(model, E, grid) - 1.0; };
  out.R_at_zero = f(0.0) + 1.0;
  if (out.R_at_zero <= 1.0) {
    out.status = CriticalStatus::kNeverViable;
    return out;
  }
  double hi = bracket_hint.value_or(crowding_upper_bound(model, grid));
  if (!(hi > 0.0)) hi = 1.0;
  for (int k = 0; k <= kMaxExpansions; ++k) {
    if (f(hi) < 0.0) {
      const RootResult root = find_root(f, 0.0, hi, 1e-10 * hi);
      out.status = CriticalStatus::kFound;
      out.E_crit = root.root;
      return out;
    }
    hi *= 2.0;
  }
  out.status = CriticalStatus::kNoCrossing;
  return out;
}

}  // namespace structured_harvest
