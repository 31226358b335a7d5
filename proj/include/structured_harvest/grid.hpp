#pragma once

// Uniform size mesh, quadrature and the CFL time step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "structured_harvest/model.hpp"

namespace structured_harvest {

struct SizeGrid {
  double l0 = 0.0;
  double lm = 0.0;
  std::size_t n_cells = 0;
  double dl = 0.0;
  std::vector<double> edges;    // n_cells + 1 nodes, edges.front() == l0, edges.back() == lm
  std::vector<double> centers;  // n_cells midpoints

  std::size_t n_nodes() const noexcept { return edges.size(); }
};

inline SizeGrid build_grid(double l0, double lm, std::size_t n_cells) {
  if (n_cells < 2) throw std::invalid_argument("size grid needs at least 2 cells");
  if (!(l0 < lm)) throw std::invalid_argument("size grid needs l0 < lm");

  SizeGrid grid;
  grid.l0 = l0;
  grid.lm = lm;
  grid.n_cells = n_cells;
  grid.dl = (lm - l0) / static_cast<double>(n_cells);
  grid.edges.resize(n_cells + 1);
  for (std::size_t i = 0; i <= n_cells; ++i) {
    grid.edges[i] = l0 + grid.dl * static_cast<double>(i);
  }
  grid.edges.back() = lm;
  grid.centers.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    grid.centers[i] = 0.5 * (grid.edges[i] + grid.edges[i + 1]);
  }
  return grid;
}

inline SizeGrid build_grid(const ModelParams& params, std::size_t n_cells) {
  return build_grid(params.l0, params.lm, n_cells);
}

/// Midpoint rule on cell averages: sum(values[i]) * dl.
inline double integrate_cells(std::span<const double> values, const SizeGrid& grid) {
  if (values.size() != grid.n_cells) {
    throw std::invalid_argument("integrate_cells: expected " + std::to_string(grid.n_cells) +
                                " values, got " + std::to_string(values.size()));
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * grid.dl;
}

/// Composite Simpson on equally spaced samples with spacing h. The node count
/// must be odd.
inline double simpson_samples(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 3 || n % 2 == 0) {
    throw std::invalid_argument("composite Simpson needs an odd node count >= 3");
  }
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    (i % 2 == 1 ? odd : even) += f[i];
  }
  return h / 3.0 * (f.front() + f.back() + 4.0 * odd + 2.0 * even);
}

/// Simpson on any node count >= 2. An odd number of intervals closes with the
/// 3/8 rule on the last three; two nodes fall back to the trapezoid.
inline double integrate_nodes(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (f[0] + f[1]);
  if (n % 2 == 1) return simpson_samples(f, h);
  if (n == 4) return 3.0 * h / 8.0 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]);
  const double head = simpson_samples(f.first(n - 3), h);
  const auto t = f.last(4);
  return head + 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]);
}

/// Composite Simpson of f on [a, b] with n_nodes equally spaced nodes.
template <class F>
double integrate_simpson(F&& f, double a, double b, std::size_t n_nodes) {
  if (n_nodes < 3 || n_nodes % 2 == 0) {
    throw std::invalid_argument("integrate_simpson: node count must be odd and >= 3");
  }
  if (!(a < b)) throw std::invalid_argument("integrate_simpson: a < b required");
  const double h = (b - a) / static_cast<double>(n_nodes - 1);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i + 1 < n_nodes; ++i) {
    const double v = f(a + h * static_cast<double>(i));
    (i % 2 == 1 ? odd : even) += v;
  }
  return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

/// Bound C on the stationary crowding index: G(E) <= p * int chi(l) dl / g_min,
/// with g_min the smallest growth rate on the mesh at E = 0.
template <CoefficientModel M>
double crowding_upper_bound(const M& model, const SizeGrid& grid) {
  const ModelParams& p = model.params();
  double g_min = std::numeric_limits<double>::infinity();
  std::vector<double> chi(grid.n_nodes());
  for (std::size_t j = 0; j < grid.n_nodes(); ++j) {
    g_min = std::min(g_min, model.growth(0.0, grid.edges[j]));
    chi[j] = model.kernel(grid.edges[j]);
  }
  return p.p * integrate_nodes(chi, grid.dl) / g_min;
}

/// Largest growth rate over the mesh and the crowding range [0, 2C].
template <CoefficientModel M>
double max_growth_rate(const M& model, const SizeGrid& grid) {
  if constexpr (HasAnalyticMaxGrowth<M>) {
    return model.max_growth();
  } else {
    constexpr int kCrowdingSamples = 65;
    const double e_hi = 2.0 * crowding_upper_bound(model, grid);
    double g_max = 0.0;
    for (int k = 0; k < kCrowdingSamples; ++k) {
      const double E = e_hi * k / (kCrowdingSamples - 1);
      for (double l : grid.edges) g_max = std::max(g_max, model.growth(E, l));
    }
    return g_max;
  }
}

/// dt = safety * dl / g_max.
template <CoefficientModel M>
double cfl_timestep(const M& model, const SizeGrid& grid, double safety = 0.8) {
  if (!(safety > 0.0 && safety <= 1.0)) {
    throw std::invalid_argument("CFL safety factor must lie in (0, 1]");
  }
  return safety * grid.dl / max_growth_rate(model, grid);
}

inline double cfl_timestep(const ModelParams& params, const SizeGrid& grid, double safety = 0.8) {
  return cfl_timestep(VonBertalanffyForms(params), grid, safety);
}

}  // namespace structured_harvest
