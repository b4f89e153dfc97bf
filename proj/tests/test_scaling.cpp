#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mobnet/scaling.hpp"
#include "test_helpers.hpp"

using namespace mobnet;
using mobnet::testing::two_node;

namespace {

NetworkParams even(int n, double lambda, double mu) {
  return {std::vector<double>(static_cast<std::size_t>(n), lambda / n),
          std::vector<double>(static_cast<std::size_t>(n), mu / n)};
}

}  // namespace

TEST(RoundedState, LargestRemainder) {
  EXPECT_EQ(rounded_state(Eigen::Vector3d(0.5, 0.3, 0.2), 7), State({4, 2, 1}));
  EXPECT_EQ(rounded_state(Eigen::Vector2d(0.5, 0.5), 0), State({0, 0}));
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd rho(4);
    for (int i = 0; i < 4; ++i) rho(i) = u(g);
    rho /= rho.sum();
    const std::int64_t total = 17 + k;
    State x = rounded_state(rho, total);
    EXPECT_EQ(x.total(), total);
    for (int i = 0; i < 4; ++i) EXPECT_LT(std::abs(static_cast<double>(x[i]) - rho(i) * total), 1.0);
  }
}

TEST(InitialStates, CornersAndScale) {
  ScalingPlan plan;
  plan.start = StartRecipe::Corner;
  plan.scale = 1.5;
  auto xs = initial_states(plan, Eigen::Vector3d(0.2, 0.3, 0.5), 100);
  ASSERT_EQ(xs.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(xs[static_cast<std::size_t>(i)][i], 150);
    EXPECT_EQ(xs[static_cast<std::size_t>(i)].total(), 150);
  }
  plan.start = StartRecipe::Proportional;
  xs = initial_states(plan, Eigen::Vector3d(0.2, 0.3, 0.5), 100);
  ASSERT_EQ(xs.size(), 1u);
  EXPECT_EQ(xs[0], State({30, 45, 75}));
}

TEST(CompositionWithEntropy, HitsRequestedLevel) {
  const Eigen::Vector3d pi(0.2, 0.3, 0.5);
  for (double h : {0.0, 0.001, 0.05, 0.5}) EXPECT_NEAR(relative_entropy(composition_with_entropy(pi, h), pi), h, 1e-10);
}

TEST(ScalingPlan, RejectsBadPlans) {
  auto expect_invalid = [](ScalingPlan p) {
    try {
      p.check(2);
      FAIL();
    } catch (const ScalingError& e) {
      EXPECT_EQ(e.kind(), ScalingErrc::InvalidPlan);
    }
  };
  ScalingPlan p;
  p.delta_exponent = 0.5;
  expect_invalid(p);
  p = {};
  p.ladder = {100, 100};
  expect_invalid(p);
  p = {};
  p.window_start = 3;
  expect_invalid(p);
  p = {};
  p.start = StartRecipe::Custom;
  expect_invalid(p);
  p = {};
  EXPECT_NO_THROW(p.check(2));
  p.delta_exponent = 0.25;
  EXPECT_DOUBLE_EQ(p.delta_at(16), 0.5);
}

TEST(Fluid, PathIsPositivePart) {
  const Eigen::Vector2d pi(0.25, 0.75);
  EXPECT_TRUE(fluid_path(pi, 1, -2, 0.25).isApprox(0.5 * pi));
  EXPECT_EQ(fluid_path(pi, 1, -2, 0.75), Eigen::Vector2d::Zero());
  EXPECT_TRUE(fluid_path(pi, 1, 1, 2).isApprox(3 * pi));
}

TEST(HomogenizationTime, MatchesFormula) {
  auto s = validate(RateMatrix(two_node(1, 3)));
  // Two nodes: P_t - Pi = e^{-4t} (I - Pi), so B = 1.1 max |I - Pi| and eta = 4.
  EXPECT_NEAR(s.gap(), 4.0, 1e-12);
  EXPECT_NEAR(s.mixing_prefactor(), 1.1 * 0.75, 1e-9);
  EXPECT_NEAR(homogenization_time(s, 0.1), -std::log(0.1 / (4 * 1.1 * 0.75)) / 4.0, 1e-9);
}

TEST(Kelly, ScaledPathFollowsRhoPt) {
  const double a = 1.0, b = 2.0;
  auto s = validate(RateMatrix(two_node(a, b)));
  const Eigen::Vector2d rho(1, 0);
  // rho P_t = pi + (rho - pi) e^{-(a + b) t} for two nodes.
  const Eigen::Vector2d pi(b / (a + b), a / (a + b));
  for (double t : {0.1, 0.5, 2.0})
    EXPECT_TRUE(s.evolve(rho, t).isApprox(pi + (rho - pi) * std::exp(-(a + b) * t), 1e-12));

  ScalingPlan plan;
  plan.start = StartRecipe::Custom;
  plan.rho = rho;
  plan.ladder = {100, 10000};
  plan.replicas = 20;
  plan.horizon = 1.0;
  plan.tolerance = 0.05;
  plan.seed = 4;
  DeviationReport r = kelly_run(plan, s, even(2, 0.5, 0.5));
  EXPECT_TRUE(r.rescan_agrees);
  EXPECT_TRUE(r.median_decreasing);
  EXPECT_EQ(r.levels.back().within, 20);
  EXPECT_TRUE(r.passed);
}

TEST(Fluid, RegimeMismatchIsRejected) {
  auto s = validate(RateMatrix(two_node(1, 1)));
  ScalingPlan plan;
  try {
    fluid_run(plan, s, even(2, 1, 1), Regime::Subcritical);
    FAIL();
  } catch (const ScalingError& e) {
    EXPECT_EQ(e.kind(), ScalingErrc::RegimeMismatch);
  }
}

TEST(Fluid, SubcriticalDeviationShrinksAndRescanAgrees) {
  auto s = validate(RateMatrix(mobnet::testing::complete3()));
  ScalingPlan plan;
  plan.ladder = {50, 800};
  plan.replicas = 20;
  plan.seed = 12;
  DeviationReport r = fluid_run(plan, s, even(3, 1, 2), Regime::Subcritical);
  EXPECT_TRUE(r.rescan_agrees);
  EXPECT_TRUE(r.median_decreasing);
  EXPECT_LT(r.levels.back().median, r.levels.front().median);
  std::ostringstream os;
  r.write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "fluid_time,deviation,N,replica,start,rescan,censored");
}

TEST(SubcriticalExit, HorizonMustPrecedeFluidEmptying) {
  auto s = validate(RateMatrix(two_node(1, 1)));
  ScalingPlan plan;
  plan.horizon = 1.5;  // t_a = 1 / (2 - 1)
  try {
    subcritical_exit_run(plan, s, even(2, 1, 2), 0.01);
    FAIL();
  } catch (const ScalingError& e) {
    EXPECT_EQ(e.kind(), ScalingErrc::InvalidPlan);
  }
}

TEST(Hitting, ClosedSystemStaysUnderChebyshevBound) {
  ScalingPlan plan;
  plan.ladder = {32, 512};
  plan.replicas = 40;
  plan.delta_exponent = 0.25;
  plan.seed = 2;
  HittingReport r = hitting_time_run(plan, validate(RateMatrix(mobnet::testing::complete3())), even(3, 3, 1));
  EXPECT_TRUE(r.closed.bound_holds);
  for (const auto& l : r.closed.levels) EXPECT_NEAR(l.reference, 3.0 / (l.delta * l.delta * l.n), 1e-12);
}
