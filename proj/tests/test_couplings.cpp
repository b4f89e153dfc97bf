#include <gtest/gtest.h>

#include "mobnet/couplings.hpp"
#include "mobnet/experiments.hpp"
#include "test_helpers.hpp"

using namespace mobnet;
using mobnet::testing::two_node;

TEST(CoupledPair, EqualStartsGiveIdenticalPaths) {
  auto s = validate(RateMatrix(mobnet::testing::complete3()));
  NetworkParams p{{0.5, 0.5, 0.5}, {1, 1, 1}};
  RngStream rng(3, 0);
  CoupledPair cp = simulate_coupled_pair(s, p, State({2, 1, 3}), State({2, 1, 3}), 10.0, rng);
  ASSERT_EQ(cp.upper.events().size(), cp.lower.events().size());
  EXPECT_EQ(cp.upper.final_state(), cp.lower.final_state());
  cp.upper.replay([&](double t, const Event*, const State& x) { EXPECT_EQ(x, cp.lower.state_at(t)); });
}

TEST(CoupledPair, EmptyLowerWithoutArrivalsStaysEmpty) {
  auto s = validate(RateMatrix(two_node(1, 2)));
  NetworkParams p{{0, 0}, {1, 1}};
  RngStream rng(4, 0);
  CoupledPair cp = simulate_coupled_pair(s, p, State({4, 2}), State::zeros(2), 10.0, rng);
  EXPECT_TRUE(cp.lower.events().empty());
  EXPECT_TRUE(check_dominance(cp).passed);
}

TEST(CoupledPair, RejectsUnorderedStarts) {
  auto s = validate(RateMatrix(two_node(1, 2)));
  RngStream rng(1, 0);
  try {
    simulate_coupled_pair(s, {{1, 1}, {1, 1}}, State({1, 2}), State({2, 0}), 1.0, rng);
    FAIL();
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.kind(), SimulationErrc::PreconditionViolated);
  }
}

TEST(CoupledPair, DominanceDetectsHandBuiltViolation) {
  CoupledPair cp{Trajectory(State({1, 0}), 1.0), Trajectory(State({1, 0}), 1.0)};
  cp.upper.push({0.5, EventKind::Departure, 0, -1});
  CheckReport r = check_dominance(cp);
  EXPECT_FALSE(r.passed);
  ASSERT_TRUE(r.first_violation.has_value());
  EXPECT_DOUBLE_EQ(*r.first_violation, 0.5);
}

TEST(ClosedCoupling, NoArrivalsOrServiceMeansOpenEqualsClosed) {
  auto s = validate(RateMatrix(mobnet::testing::cycle3()));
  RngStream rng(8, 0);
  ClosedCoupling c = simulate_closed_coupling(s, {{0, 0, 0}, {0, 0, 0}}, State({3, 0, 1}), 10.0, rng);
  c.open.replay([&](double t, const Event*, const State& x) { EXPECT_EQ(x, c.closed.state_at(t)); });
  EXPECT_TRUE(c.arrival_times.empty());
  EXPECT_TRUE(c.service_times.empty());
}

TEST(ClosedCoupling, SandwichDetectsHandBuiltViolation) {
  ClosedCoupling c{Trajectory(State({1, 1}), 1.0), Trajectory(State({1, 1}), 1.0), {}, {}};
  c.open.push({0.3, EventKind::Migration, 0, 1});
  EXPECT_FALSE(check_sandwich(c).passed);
}

TEST(Couplings, RandomRunsHaveNoViolations) {
  std::mt19937_64 g(2024);
  for (int n : {2, 3}) {
    auto s = validate(RateMatrix(mobnet::testing::random_rate_matrix(n, g)));
    NetworkParams p;
    for (int i = 0; i < n; ++i) {
      p.arrival.push_back(0.3 + 0.2 * i);
      p.capacity.push_back(0.8 + 0.1 * i);
    }
    SuiteReport r = pathwise_couplings(s, p, 300, 6.0, 99 + static_cast<unsigned>(n));
    for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  }
}

TEST(FreeWalk, MeanMatchesDrift) {
  const int runs = 20000;
  double sum = 0, sq = 0;
  for (int k = 0; k < runs; ++k) {
    RngStream rng(derive_seed(6, {static_cast<std::uint64_t>(k)}), 0);
    const double l = static_cast<double>(sample_free_walk(10, 1.5, 1.0, 2.0, rng));
    sum += l;
    sq += l * l;
  }
  // E = 10 + (1.5 - 1) 2 = 11, Var = (1.5 + 1) 2 = 5.
  const double mean = sum / runs;
  EXPECT_NEAR(mean, 11.0, 4 * std::sqrt(5.0 / runs));
  EXPECT_NEAR(sq / runs - mean * mean, 5.0, 0.25);
}
