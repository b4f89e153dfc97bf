#include <gtest/gtest.h>

#include <cmath>

#include "mobnet/couplings.hpp"
#include "mobnet/simulator.hpp"
#include "mobnet/stats.hpp"
#include "test_helpers.hpp"

using namespace mobnet;
using mobnet::testing::two_node;

namespace {

NetworkParams even(int n, double lambda, double mu) {
  return {std::vector<double>(static_cast<std::size_t>(n), lambda / n),
          std::vector<double>(static_cast<std::size_t>(n), mu / n)};
}

}  // namespace

TEST(Simulate, OnlyMigrationFromSingleParticle) {
  auto s = validate(RateMatrix(two_node(1, 1)));
  NetworkParams p{{0, 0}, {0, 0}};
  double sum = 0;
  const int runs = 20000;
  for (int k = 0; k < runs; ++k) {
    RngStream rng(derive_seed(3, {static_cast<std::uint64_t>(k)}), 0);
    Trajectory path = simulate(s, p, State({1, 0}), 50.0, rng);
    ASSERT_FALSE(path.events().empty());
    const Event& e = path.events().front();
    ASSERT_EQ(e.kind, EventKind::Migration);
    ASSERT_EQ(e.from, 0);
    ASSERT_EQ(e.to, 1);
    sum += e.time;
  }
  // Exponential(1) mean, standard error 1/sqrt(runs).
  EXPECT_NEAR(sum / runs, 1.0, 4.0 / std::sqrt(static_cast<double>(runs)));
}

TEST(Simulate, EmptyNetworkWithoutArrivalsIsFrozen) {
  auto s = validate(RateMatrix(mobnet::testing::cycle3()));
  NetworkParams p{{0, 0, 0}, {1, 2, 3}};
  RngStream rng(1, 0);
  Trajectory path = simulate(s, p, State::zeros(3), 100.0, rng);
  EXPECT_TRUE(path.events().empty());
}

TEST(Simulate, DeterministicUnderSeed) {
  auto s = validate(RateMatrix(mobnet::testing::complete3()));
  NetworkParams p = even(3, 2, 1);
  RngStream a(42, 7), b(42, 7), c(43, 7);
  Trajectory x = simulate(s, p, State({3, 1, 0}), 20.0, a);
  Trajectory y = simulate(s, p, State({3, 1, 0}), 20.0, b);
  Trajectory z = simulate(s, p, State({3, 1, 0}), 20.0, c);
  ASSERT_EQ(x.events().size(), y.events().size());
  for (std::size_t k = 0; k < x.events().size(); ++k) {
    EXPECT_EQ(x.events()[k].time, y.events()[k].time);
    EXPECT_EQ(x.events()[k].kind, y.events()[k].kind);
    EXPECT_EQ(x.events()[k].from, y.events()[k].from);
    EXPECT_EQ(x.events()[k].to, y.events()[k].to);
  }
  EXPECT_NE(x.events().front().time, z.events().front().time);
}

TEST(Simulate, EachEventMovesPopulationByAtMostOne) {
  std::mt19937_64 g(5);
  auto s = validate(RateMatrix(mobnet::testing::random_rate_matrix(4, g)));
  NetworkParams p = even(4, 3, 2);
  RngStream rng(9, 0);
  Trajectory path = simulate(s, p, State({2, 0, 1, 4}), 30.0, rng);
  path.validate();
  std::int64_t prev = path.initial().total();
  path.replay([&](double, const Event* e, const State& x) {
    if (!e) return;
    const std::int64_t d = x.total() - prev;
    EXPECT_EQ(d, e->kind == EventKind::Arrival ? 1 : e->kind == EventKind::Departure ? -1 : 0);
    prev = x.total();
  });
}

TEST(Simulate, RateGuardRaises) {
  auto s = validate(RateMatrix(two_node(1, 1)));
  SimulationLimits limits;
  limits.max_total_rate = 50;
  RngStream rng(1, 0);
  try {
    simulate(s, even(2, 40, 1), State({5, 5}), 100.0, rng, limits);
    FAIL() << "expected RateOverflow";
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.kind(), SimulationErrc::RateOverflow);
  }
}

TEST(Simulate, EventGuardTruncates) {
  auto s = validate(RateMatrix(two_node(1, 1)));
  SimulationLimits limits;
  limits.max_events = 10;
  RngStream rng(1, 0);
  Trajectory path = simulate(s, even(2, 1, 1), State({5, 5}), 1000.0, rng, limits);
  EXPECT_TRUE(path.truncated());
  EXPECT_EQ(path.events().size(), 10u);
}

// Far from the boundary, L(t) is the free walk L(0) + N_lambda(t) - N_mu(t).
TEST(Simulate, PopulationFollowsMM1WalkBeforeEmptiness) {
  auto s = validate(RateMatrix(two_node(1, 1)));
  const NetworkParams p = even(2, 1, 2);
  const int runs = 10000;
  for (double t : {1.0, 2.0}) {
    std::vector<std::int64_t> net, walk;
    int touched = 0;
    for (int k = 0; k < runs; ++k) {
      RngStream a(derive_seed(11, {static_cast<std::uint64_t>(k)}), 0);
      RngStream b(derive_seed(12, {static_cast<std::uint64_t>(k)}), 0);
      Trajectory path = simulate(s, p, State({30, 30}), t, a);
      path.replay([&](double, const Event*, const State& x) { touched += x.any_empty() ? 1 : 0; });
      net.push_back(path.final_state().total());
      walk.push_back(sample_free_walk(60, 1, 2, t, b));
    }
    ASSERT_EQ(touched, 0);
    EXPECT_GT(chi_square_two_sample_pvalue(net, walk), 0.01) << "t=" << t;
  }
}

TEST(Simulate, MeanPopulationAgreesWithTripleConstruction) {
  auto s = validate(RateMatrix(two_node(1, 1)));
  const NetworkParams p = even(2, 2, 1);
  const int runs = 100000;
  std::vector<double> a, b;
  a.reserve(runs);
  b.reserve(runs);
  for (int k = 0; k < runs; ++k) {
    RngStream r1(derive_seed(21, {static_cast<std::uint64_t>(k)}), 0);
    RngStream r2(derive_seed(22, {static_cast<std::uint64_t>(k)}), 0);
    a.push_back(static_cast<double>(simulate(s, p, State({5, 5}), 1.0, r1).final_state().total()));
    b.push_back(static_cast<double>(simulate_triple(s, p, State({5, 5}), 1.0, r2).final_state().x.total()));
  }
  const MeanSe ma = mean_se(a), mb = mean_se(b);
  EXPECT_LT(std::abs(ma.mean - mb.mean), 3 * std::hypot(ma.se, mb.se));
}

TEST(Labelled, AggregateMatchesDirectSimulationWithoutService) {
  auto s = validate(RateMatrix(mobnet::testing::complete3()));
  NetworkParams p{{0.5, 0.2, 0.3}, {0, 0, 0}};
  const int runs = 10000;
  for (double t : {1.0, 5.0}) {
    std::vector<std::int64_t> la, lb, xa, xb;
    for (int k = 0; k < runs; ++k) {
      RngStream r(derive_seed(31, {static_cast<std::uint64_t>(k)}), 0);
      const State direct = simulate(s, p, State({2, 0, 1}), t, r).final_state();
      const State agg = simulate_labelled(s, p, State({2, 0, 1}), t, derive_seed(32, {static_cast<std::uint64_t>(k)}))
                            .aggregate.final_state();
      la.push_back(direct.total());
      lb.push_back(agg.total());
      xa.push_back(direct[0]);
      xb.push_back(agg[0]);
    }
    EXPECT_GT(chi_square_two_sample_pvalue(la, lb), 0.01) << "L, t=" << t;
    EXPECT_GT(chi_square_two_sample_pvalue(xa, xb), 0.01) << "X_1, t=" << t;
  }
}

TEST(Labelled, EmptyStartCountsArrivals) {
  auto s = validate(RateMatrix(two_node(1, 2)));
  NetworkParams p{{0.7, 0.3}, {0, 0}};
  LabelledRun run = simulate_labelled(s, p, State::zeros(2), 4.0, 8);
  EXPECT_EQ(static_cast<std::size_t>(run.aggregate.final_state().total()), run.particles.size());
  for (const auto& q : run.particles) EXPECT_GT(q.birth, 0.0);
}

TEST(Labelled, RejectsService) {
  auto s = validate(RateMatrix(two_node(1, 2)));
  try {
    simulate_labelled(s, {{1, 1}, {0, 0.5}}, State({1, 1}), 1.0, 1);
    FAIL();
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.kind(), SimulationErrc::InvalidParams);
  }
}

TEST(Triple, NoServiceMeansNoKilledOrVirtualCustomers) {
  auto s = validate(RateMatrix(mobnet::testing::cycle3()));
  RngStream rng(4, 0);
  TriplePath tp = simulate_triple(s, {{1, 1, 1}, {0, 0, 0}}, State({1, 0, 2}), 10.0, rng);
  tp.replay([&](double, const TripleEvent*, const TripleState& st) {
    EXPECT_EQ(st.y.total(), 0);
    EXPECT_EQ(st.z.total(), 0);
  });
  EXPECT_TRUE(check_mm1_embedding(tp).passed);
}

TEST(Triple, DecompositionHoldsOnRandomRuns) {
  std::mt19937_64 g(17);
  auto s = validate(RateMatrix(mobnet::testing::random_rate_matrix(3, g)));
  const NetworkParams p{{0.4, 0.1, 0.2}, {0.9, 1.1, 0.6}};
  for (int k = 0; k < 200; ++k) {
    RngStream rng(derive_seed(5, {static_cast<std::uint64_t>(k)}), 0);
    TriplePath tp = simulate_triple(s, p, State({1, 2, 0}), 8.0, rng);
    tp.replay([&](double, const TripleEvent*, const TripleState& st) {
      ASSERT_EQ(st.x.total() + st.y.total() - 3, st.n_lambda);
      ASSERT_EQ(st.y.total() + st.z.total(), st.n_mu);
    });
    CheckReport r = check_mm1_embedding(tp);
    ASSERT_TRUE(r.passed) << r.detail;
  }
}

TEST(Triple, BlockedServiceMakesEmbeddingStrict) {
  // Kill at node 1 empties it (T_0 = 0.1); a service event at the empty node
  // creates a virtual customer, so L stays above L(0) + N_lambda - N_mu.
  TriplePath tp(State({1, 1}), 1.0);
  tp.push({0.1, TripleKind::Kill, 0, -1});
  tp.push({0.2, TripleKind::Virtual, 0, -1});
  tp.push({0.3, TripleKind::Birth, -1, 1});
  tp.validate();
  std::vector<std::int64_t> gap;
  tp.replay([&](double, const TripleEvent*, const TripleState& st) {
    gap.push_back(st.x.total() - (2 + st.n_lambda - st.n_mu));
  });
  EXPECT_EQ(gap, (std::vector<std::int64_t>{0, 0, 1, 1}));
  EXPECT_TRUE(check_mm1_embedding(tp).passed);
}
