#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "structured_harvest/policy.hpp"
#include "structured_harvest/search.hpp"
#include "test_support.hpp"

namespace sh = structured_harvest;

TEST(RootFinder, BracketedAndNot) {
  const auto r = sh::find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14);
  ASSERT_TRUE(r.bracketed);
  EXPECT_NEAR(r.root, std::sqrt(2.0), 1e-13);
  const auto miss = sh::find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-10);
  EXPECT_FALSE(miss.bracketed);
  EXPECT_EQ(miss.f_lo, 2.0);
  const auto edge = sh::find_root([](double x) { return x - 3.0; }, 3.0, 5.0, 1e-10);
  EXPECT_TRUE(edge.bracketed);
  EXPECT_EQ(edge.root, 3.0);
}

TEST(GoldenSection, Quadratic) {
  const auto g = sh::golden_section_maximize([](double l) { return -(l - 70.0) * (l - 70.0); }, 60.0, 80.0, 0.05, 65.0);
  EXPECT_EQ(g.status, sh::GoldenStatus::kConverged);
  EXPECT_NEAR(g.x, 70.0, 0.05);
}

TEST(GoldenSection, FlatReturnsMidpoint) {
  const auto g = sh::golden_section_maximize([](double) { return 3.0; }, 60.0, 80.0, 0.05, 65.0);
  EXPECT_EQ(g.status, sh::GoldenStatus::kFlat);
  EXPECT_EQ(g.x, 70.0);
}

TEST(GoldenSection, NonUnimodalFallsBack) {
  const auto g = sh::golden_section_maximize([](double l) { return (l - 70.0) * (l - 70.0); }, 60.0, 80.0, 0.05, 61.0);
  EXPECT_EQ(g.status, sh::GoldenStatus::kNonUnimodal);
  EXPECT_EQ(g.x, 61.0);
}

TEST(GoldenSection, MaximumAtBracketEnd) {
  const auto g = sh::golden_section_maximize([](double l) { return l; }, 0.0, 1.0, 1e-6, 0.5);
  EXPECT_EQ(g.status, sh::GoldenStatus::kConverged);
  EXPECT_NEAR(g.x, 1.0, 1e-6);
}

TEST(Revenue, LeftEndpointSumOfConstantRate) {
  // From the harvested discrete steady state the harvest value rate is
  // constant, so J is a geometric series.
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 200);
  const auto pol = sh::make_threshold_policy(60.0, 0.5, grid);
  const auto ss = sh::solve_discrete_steady_state(m, grid, pol);
  ASSERT_TRUE(ss.ok);
  sh::SimulationOptions opt;
  opt.dt = 0.0125;
  const auto rec = sh::simulate(ss.state, pol, m, grid, 10.0, opt);
  const double H = sh::harvest_value_rate(ss.state, pol, grid, m);
  const double q = std::exp(-m.params().r * 0.0125);
  const std::size_t n = rec.times.size() - 1;
  const double expected = H * 0.0125 * (1.0 - std::pow(q, static_cast<double>(n))) / (1.0 - q);
  EXPECT_EQ(n, 800u);
  EXPECT_NEAR(sh::discounted_revenue(rec, m), expected, 1e-8 * expected);
}

TEST(Revenue, NoHarvestEarnsNothing) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 100);
  auto setup = sh::default_evaluation_setup(m, grid);
  setup.horizon = 2.0;
  const auto ev = sh::evaluate_threshold(130.0, m, grid, setup);
  EXPECT_EQ(ev.J_T, 0.0);
  // The run stays on the no-harvest baseline it started from.
  const double E0 = sh::crowding_index(setup.initial, grid, m);
  EXPECT_NEAR(ev.E_terminal, E0, 1e-9 * E0);
  EXPECT_THROW(sh::evaluate_threshold(10.0, m, grid, setup), std::domain_error);
}

TEST(Evaluate, CaseStudyNearOptimum) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 400);
  const auto setup = sh::default_evaluation_setup(m, grid);
  const auto ev = sh::evaluate_threshold(66.45, m, grid, setup);
  ASSERT_TRUE(ev.ok());
  EXPECT_NEAR(ev.R_terminal, 1.977621, 1e-2);
  EXPECT_NEAR(ev.N_terminal, 163572.21, 0.01 * 163572.21);
  EXPECT_TRUE(ev.viable);
  EXPECT_GT(ev.J_T, 0.0);
}

TEST(Sweep, ArgmaxTiesGoToLargerThreshold) {
  std::vector<sh::PolicyEvaluation> evals(4);
  for (std::size_t i = 0; i < 4; ++i) evals[i].l_star = 20.0 + static_cast<double>(i);
  evals[0].J_T = 1.0;
  evals[1].J_T = 5.0;
  evals[2].J_T = 5.0;
  evals[3].error = "failed";
  EXPECT_EQ(sh::revenue_argmax(evals), 2u);
  for (auto& e : evals) e.error = "failed";
  EXPECT_FALSE(sh::revenue_argmax(evals).has_value());
}

TEST(Sweep, Lattice) {
  const auto a = sh::threshold_lattice(20.0, 130.0, 1.0);
  EXPECT_EQ(a.size(), 111u);
  EXPECT_EQ(a.back(), 130.0);
  const auto b = sh::threshold_lattice(20.0, 21.0, 0.3);
  EXPECT_EQ(b.size(), 5u);
  EXPECT_EQ(b.back(), 21.0);
  EXPECT_THROW(sh::threshold_lattice(2.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(sh::threshold_lattice(1.0, 2.0, 0.0), std::invalid_argument);
}

TEST(Sweep, ParallelMatchesSerialBitForBit) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 100);
  auto setup = sh::default_evaluation_setup(m, grid);
  setup.horizon = 5.0;
  const auto l_grid = sh::threshold_lattice(30.0, 100.0, 5.0);
  const auto serial = sh::sweep_thresholds(l_grid, m, grid, setup, 1);
  const auto parallel = sh::sweep_thresholds(l_grid, m, grid, setup, 4);
  const auto again = sh::sweep_thresholds(l_grid, m, grid, setup, 3);
  ASSERT_EQ(serial.evaluations.size(), l_grid.size());
  for (std::size_t i = 0; i < l_grid.size(); ++i) {
    EXPECT_EQ(serial.evaluations[i].l_star, l_grid[i]);
    EXPECT_EQ(serial.evaluations[i].J_T, parallel.evaluations[i].J_T);
    EXPECT_EQ(serial.evaluations[i].E_terminal, parallel.evaluations[i].E_terminal);
    EXPECT_EQ(parallel.evaluations[i].N_terminal, again.evaluations[i].N_terminal);
  }
  EXPECT_EQ(serial.argmax, parallel.argmax);
}

TEST(Sweep, InputValidationAndFailedCandidates) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 50);
  auto setup = sh::default_evaluation_setup(m, grid);
  setup.horizon = 1.0;
  EXPECT_THROW(sh::sweep_thresholds({}, m, grid, setup), std::invalid_argument);
  EXPECT_THROW(sh::sweep_thresholds({60.0, 50.0}, m, grid, setup), std::invalid_argument);
  // A candidate outside the domain is recorded as a failure, not thrown.
  const auto res = sh::sweep_thresholds({50.0, 60.0, 200.0}, m, grid, setup);
  EXPECT_TRUE(res.evaluations[0].ok());
  EXPECT_FALSE(res.evaluations[2].ok());
  ASSERT_TRUE(res.argmax.has_value());
  EXPECT_LT(*res.argmax, 2u);
}

TEST(Sweep, RefinementImprovesOnCoarseGrid) {
  const sh::VonBertalanffyForms m;
  const auto grid = sh::build_grid(m.params(), 100);
  auto setup = sh::default_evaluation_setup(m, grid);
  setup.horizon = 20.0;
  const auto l_grid = sh::threshold_lattice(20.0, 130.0, 10.0);
  const auto sweep = sh::sweep_thresholds(l_grid, m, grid, setup, 2);
  ASSERT_TRUE(sweep.argmax.has_value());
  EXPECT_FALSE(sweep.argmax_at_boundary);
  const auto opt = sh::refine_optimum(sweep, l_grid, m, grid, setup);
  EXPECT_GE(opt.evaluation.J_T, sweep.evaluations[*sweep.argmax].J_T);
  EXPECT_GE(opt.l_star, l_grid[*sweep.argmax - 1]);
  EXPECT_LE(opt.l_star, l_grid[*sweep.argmax + 1]);
}

TEST(Viability, Partition) {
  std::vector<sh::PolicyEvaluation> evals(3);
  evals[0].viable = true;
  evals[2].viable = true;
  const auto part = sh::viability_filter(evals, 1);
  EXPECT_EQ(part.viable.size(), 2u);
  EXPECT_EQ(part.non_viable.size(), 1u);
  ASSERT_TRUE(part.argmax_viable.has_value());
  EXPECT_FALSE(*part.argmax_viable);
  EXPECT_FALSE(sh::viability_filter(evals).argmax_viable.has_value());
}
