#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "structured_harvest/grid.hpp"
#include "test_support.hpp"

namespace sh = structured_harvest;

TEST(Grid, CaseStudyMesh) {
  const auto g = sh::build_grid(20.0, 130.0, 400);
  EXPECT_NEAR(g.dl, 0.275, 1e-15);
  EXPECT_EQ(g.edges.size(), 401u);
  EXPECT_EQ(g.edges.front(), 20.0);
  EXPECT_EQ(g.edges.back(), 130.0);
  EXPECT_NEAR(sh::build_grid(20.0, 130.0, 800).dl, 0.1375, 1e-15);
}

TEST(Grid, TwoCellMesh) {
  const auto g = sh::build_grid(0.0, 1.0, 2);
  EXPECT_EQ(g.edges, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(g.centers, (std::vector<double>{0.25, 0.75}));
}

TEST(Grid, RejectsBadInput) {
  EXPECT_THROW(sh::build_grid(0.0, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(sh::build_grid(0.0, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(sh::build_grid(2.0, 1.0, 10), std::invalid_argument);
}

TEST(Grid, MeshInvariants) {
  for (std::size_t n : {2u, 3u, 7u, 400u, 1601u}) {
    const auto g = sh::build_grid(20.0, 130.0, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += g.edges[i + 1] - g.edges[i];
      EXPECT_DOUBLE_EQ(g.centers[i], 0.5 * (g.edges[i] + g.edges[i + 1]));
      if (i > 0) {
        EXPECT_GT(g.centers[i], g.centers[i - 1]);
      }
    }
    EXPECT_NEAR(total, 110.0, 1e-11);
  }
}

TEST(Quadrature, CellIntegrals) {
  const auto g = sh::build_grid(20.0, 130.0, 400);
  EXPECT_NEAR(sh::integrate_cells(std::vector<double>(400, 1.0), g), 110.0, 1e-10);
  EXPECT_EQ(sh::integrate_cells(std::vector<double>(400, 0.0), g), 0.0);
  const auto g2 = sh::build_grid(0.0, 1.0, 2);
  EXPECT_DOUBLE_EQ(sh::integrate_cells(g2.centers, g2), 0.5);
  EXPECT_THROW(sh::integrate_cells(std::vector<double>(3, 1.0), g2), std::invalid_argument);
}

TEST(Quadrature, SimpsonExactness) {
  EXPECT_DOUBLE_EQ(sh::integrate_simpson([](double l) { return l * l * l; }, 0.0, 1.0, 5), 0.25);
  EXPECT_NEAR(sh::integrate_simpson([](double) { return 1.0; }, 20.0, 130.0, 3), 110.0, 1e-12);
  const double v = sh::integrate_simpson([](double l) { return std::exp(-l); }, 0.0, 1.0, 101);
  EXPECT_NEAR(v, 1.0 - std::exp(-1.0), 1e-10);
  EXPECT_THROW(sh::integrate_simpson([](double) { return 1.0; }, 0.0, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(sh::integrate_simpson([](double) { return 1.0; }, 1.0, 0.0, 5), std::invalid_argument);
}

TEST(Quadrature, SimpsonCubicProperty) {
  // Random cubics on random intervals against the analytic antiderivative.
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a0 = coef(rng), a1 = coef(rng), a2 = coef(rng), a3 = coef(rng);
    const double lo = 20.0 + coef(rng), hi = lo + 10.0 + 3.0 * std::abs(coef(rng));
    auto f = [&](double x) { return a0 + x * (a1 + x * (a2 + x * a3)); };
    auto F = [&](double x) { return x * (a0 + x * (a1 / 2 + x * (a2 / 3 + x * a3 / 4))); };
    const double exact = F(hi) - F(lo);
    const double scale = std::abs(a3) * std::pow(hi, 4) + 1.0;
    EXPECT_NEAR(sh::integrate_simpson(f, lo, hi, 2 * (trial % 7) + 3), exact, 1e-12 * scale);
  }
}

TEST(Quadrature, NodeIntegralsHandleAnyCount) {
  // Odd interval counts close with the 3/8 rule; both are exact for cubics.
  for (std::size_t n : {2u, 3u, 4u, 5u, 6u, 9u, 10u}) {
    const double h = 1.0 / static_cast<double>(n - 1);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = h * static_cast<double>(i);
      f[i] = n == 2 ? x : x * x * x;
    }
    EXPECT_NEAR(sh::integrate_nodes(f, h), n == 2 ? 0.5 : 0.25, 1e-14) << n;
  }
}

TEST(Cfl, CaseStudyStep) {
  const auto p = sh::case_study_params();
  const auto g400 = sh::build_grid(p, 400);
  const double dt = sh::cfl_timestep(p, g400, 0.8);
  EXPECT_NEAR(dt, 0.0112239, 0.5e-7);
  EXPECT_NEAR(sh::cfl_timestep(p, sh::build_grid(p, 800), 0.8), 0.00561196, 0.5e-8);
  EXPECT_NEAR(sh::cfl_timestep(p, g400, 0.4), 0.5 * dt, 1e-17);
  EXPECT_THROW(sh::cfl_timestep(p, g400, 0.0), std::invalid_argument);
  EXPECT_THROW(sh::cfl_timestep(p, g400, 1.5), std::invalid_argument);
}

TEST(Cfl, ConstantGrowthUsesScanFallback) {
  sh::testing::ConstantForms m;
  m.g0 = 4.0;
  const auto grid = sh::build_grid(m.p, 100);
  EXPECT_DOUBLE_EQ(sh::cfl_timestep(m, grid, 1.0), grid.dl / 4.0);
}
