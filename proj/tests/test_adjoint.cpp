#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "structured_harvest/adjoint.hpp"
#include "test_support.hpp"

namespace sh = structured_harvest;
using sh::testing::ConstantForms;
using sh::testing::integral_l3_exp;

TEST(Adjoint, ConstantPriceClosedForm) {
  ConstantForms m;
  m.c_const = 4.0;
  const auto grid = sh::build_grid(m.p, 400);
  const double r = m.p.r;
  const double u = 0.5;
  for (double ls : {60.0, 66.3}) {
    const auto pol = sh::make_threshold_policy(ls, u, grid);
    const auto adj = sh::solve_stationary_adjoint(m, 0.0, pol, grid);
    const double a1 = (r + m.mu0 + u) / m.g0;
    const double a0 = (r + m.mu0) / m.g0;
    const double lam_star = m.c_const * u / (r + m.mu0 + u) * (1.0 - std::exp(-a1 * (m.p.lm - ls)));
    for (std::size_t j = 0; j < grid.n_nodes(); ++j) {
      const double l = grid.edges[j];
      const double want = l >= ls ? m.c_const * u / (r + m.mu0 + u) * (1.0 - std::exp(-a1 * (m.p.lm - l)))
                                  : lam_star * std::exp(-a0 * (ls - l));
      EXPECT_NEAR(adj.lambda[j], want, 1e-12 * m.c_const) << l;
    }
    EXPECT_EQ(adj.lambda.back(), 0.0);
  }
}

TEST(Adjoint, CubicPriceSecondOrderAccurate) {
  ConstantForms m;
  const double u = 0.5;
  const double a = (m.p.r + m.mu0 + u) / m.g0;
  auto exact = [&](double l) { return m.p.c0 * u / m.g0 * integral_l3_exp(l, m.p.lm, l, a); };
  double prev_err = 0.0;
  for (std::size_t n : {100u, 200u, 400u}) {
    const auto grid = sh::build_grid(m.p, n);
    const auto adj = sh::solve_stationary_adjoint(m, 0.0, sh::make_threshold_policy(20.0, u, grid), grid);
    double err = 0.0;
    double peak = 0.0;
    for (std::size_t j = 0; j < grid.n_nodes(); ++j) {
      err = std::max(err, std::abs(adj.lambda[j] - exact(grid.edges[j])));
      peak = std::max(peak, exact(grid.edges[j]));
    }
    EXPECT_LT(err, 1e-3 * peak);
    if (prev_err > 0.0) {
      EXPECT_NEAR(prev_err / err, 4.0, 0.2);
    }
    prev_err = err;
  }
}

TEST(Adjoint, NoHarvestGivesZeroShadowValue) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 100);
  const auto adj = sh::solve_stationary_adjoint(m, 1e5, sh::no_harvest_policy(grid), grid);
  for (double v : adj.lambda) EXPECT_EQ(v, 0.0);
  const auto out = sh::extract_threshold(sh::switching_function(adj, m), adj.nodes);
  EXPECT_EQ(out.which, sh::SwitchingCase::kAllHarvest);
  EXPECT_THROW(sh::solve_stationary_adjoint(m, -1.0, sh::no_harvest_policy(grid), grid), std::domain_error);
}

TEST(Switching, CaseStudyHasSingleCrossing) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 400);
  const auto pol = sh::make_threshold_policy(64.0, 0.5, grid);
  const auto steady = sh::solve_steady_crowding(m, grid, &pol);
  ASSERT_TRUE(steady.ok);
  const auto adj = sh::solve_stationary_adjoint(m, steady.E, pol, grid);
  const auto S = sh::switching_function(adj, m);
  EXPECT_LT(S.front(), 0.0);
  EXPECT_GT(S.back(), 0.0);
  const auto out = sh::extract_threshold(S, adj.nodes);
  EXPECT_EQ(out.which, sh::SwitchingCase::kThreshold);
  EXPECT_EQ(out.sign_changes, 1u);
  ASSERT_TRUE(out.l_star.has_value());
  EXPECT_GT(*out.l_star, m.params().l0);
  EXPECT_LT(*out.l_star, m.params().lm);
}

TEST(Switching, Classification) {
  const std::vector<double> nodes{0, 1, 2, 3, 4};
  const auto protect = sh::extract_threshold({-5, -4, -3, -2, -1}, nodes);
  EXPECT_EQ(protect.which, sh::SwitchingCase::kAllProtect);
  EXPECT_FALSE(protect.l_star.has_value());
  EXPECT_TRUE(protect.strictly_increasing);

  const auto harvest = sh::extract_threshold({1, 2, 3, 4, 5}, nodes);
  EXPECT_EQ(harvest.which, sh::SwitchingCase::kAllHarvest);

  const auto thr = sh::extract_threshold({-3, -1, 1, 3, 5}, nodes);
  EXPECT_EQ(thr.which, sh::SwitchingCase::kThreshold);
  EXPECT_DOUBLE_EQ(*thr.l_star, 1.5);

  const auto zero_node = sh::extract_threshold({-2, -1, 0, 1, 2}, nodes);
  EXPECT_EQ(zero_node.which, sh::SwitchingCase::kThreshold);
  EXPECT_EQ(zero_node.sign_changes, 1u);
  EXPECT_DOUBLE_EQ(*zero_node.l_star, 2.0);

  const auto wiggle = sh::extract_threshold({-1, 1, -1, 1, 2}, nodes);
  EXPECT_EQ(wiggle.which, sh::SwitchingCase::kNonMonotone);
  EXPECT_EQ(wiggle.sign_changes, 3u);
  EXPECT_FALSE(wiggle.strictly_increasing);

  const auto falling = sh::extract_threshold({2, 1, -1, -2, -3}, nodes);
  EXPECT_EQ(falling.which, sh::SwitchingCase::kNonMonotone);

  const auto dip = sh::extract_threshold({-1, -2, -1, 1, 2}, nodes);
  EXPECT_EQ(dip.which, sh::SwitchingCase::kThreshold);
  EXPECT_FALSE(dip.strictly_increasing);

  EXPECT_THROW(sh::extract_threshold({1, 2}, nodes), std::invalid_argument);
  EXPECT_STREQ(sh::to_string(sh::SwitchingCase::kNonMonotone), "non-monotone switching");
}

TEST(Coupling, VanishesWithoutCrowdingFeedback) {
  ConstantForms m;
  const auto grid = sh::build_grid(m.p, 200);
  const auto pol = sh::make_threshold_policy(60.0, 0.5, grid);
  const auto prof = sh::stationary_profile(m, 1e4, grid, &pol);
  const auto adj = sh::solve_stationary_adjoint(m, 1e4, pol, grid);
  EXPECT_EQ(sh::nonlocal_coupling_term(prof, adj, m, grid), 0.0);
  const auto ratio = sh::weak_coupling_ratio(prof, adj, m, grid);
  ASSERT_TRUE(ratio.has_value());
  EXPECT_EQ(*ratio, 0.0);
}

TEST(Coupling, LinearInMortalityFeedback) {
  // With only mu depending on E, C = -mu1 int x lambda.
  ConstantForms m;
  const auto grid = sh::build_grid(m.p, 200);
  const auto pol = sh::make_threshold_policy(60.0, 0.5, grid);
  const auto prof = sh::stationary_profile(m, 0.0, grid, &pol);
  const auto adj = sh::solve_stationary_adjoint(m, 0.0, pol, grid);
  std::vector<double> xl(grid.n_nodes());
  for (std::size_t j = 0; j < xl.size(); ++j) xl[j] = prof.profile[j] * adj.lambda[j];
  const double moment = sh::integrate_nodes(xl, grid.dl);
  for (double mu1 : {1e-7, 3e-7}) {
    m.mu1 = mu1;
    EXPECT_NEAR(sh::nonlocal_coupling_term(prof, adj, m, grid), -mu1 * moment, 1e-12 * mu1 * moment);
  }
}

TEST(Coupling, CaseStudyRatioIsSmall) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 400);
  const auto pol = sh::make_threshold_policy(64.0, 0.5, grid);
  const auto steady = sh::solve_steady_crowding(m, grid, &pol);
  const auto adj = sh::solve_stationary_adjoint(m, steady.E, pol, grid);
  const auto ratio = sh::weak_coupling_ratio(steady.profile, adj, m, grid);
  ASSERT_TRUE(ratio.has_value());
  EXPECT_GT(*ratio, 0.0);
  EXPECT_LT(*ratio, 1.0);
}

TEST(FixedPoint, ConvergesOnCaseStudy) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 200);
  const auto fp = sh::adjoint_fixed_point(m, grid, 60.0);
  EXPECT_TRUE(fp.converged) << fp.message;
  ASSERT_FALSE(fp.history.empty());
  const auto& last = fp.history.back();
  ASSERT_TRUE(last.l_star_out.has_value());
  EXPECT_NEAR(fp.l_star, *last.l_star_out, 2e-3);
}

TEST(FixedPoint, StopsOnNonThresholdCase) {
  // Constant price: S = c - lambda > 0 everywhere.
  ConstantForms m;
  m.c_const = 2.0;
  const auto grid = sh::build_grid(m.p, 50);
  const auto fp = sh::adjoint_fixed_point(m, grid, 60.0);
  EXPECT_FALSE(fp.converged);
  ASSERT_EQ(fp.history.size(), 1u);
  EXPECT_EQ(fp.history[0].which, sh::SwitchingCase::kAllHarvest);
}
