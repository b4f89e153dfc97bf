#include <gtest/gtest.h>

#include <random>

#include "mobnet/flow.hpp"
#include "test_helpers.hpp"

using namespace mobnet;

namespace {

MartingaleModel two_node_model(double a, double b, NetworkParams p) {
  return MartingaleModel(validate(RateMatrix(mobnet::testing::two_node(a, b))), std::move(p));
}

// For two nodes H is the eigenline of -eta, so phi(v, s) = e^{eta s} v and
// phi_0(v) = sum_i (mu_i log(1 + v_i) - lambda_i v_i) / eta.
double potential_two_node(const Eigen::Vector2d& v, double eta, const NetworkParams& p) {
  double out = 0;
  for (int i = 0; i < 2; ++i) out += (p.capacity[i] * std::log1p(v(i)) - p.arrival[i] * v(i)) / eta;
  return out;
}

}  // namespace

TEST(Generator, MatchesHandExpansion) {
  auto s = validate(RateMatrix(mobnet::testing::two_node(2, 1)));
  NetworkParams p{{0.5, 0.25}, {1.0, 3.0}};
  auto f = [](const State& x) { return static_cast<double>(x[0] * x[0] + 10 * x[1]); };
  // x = (2, 1): arrivals +5, +10; departures -3, -10; migrations 2*2*7 and 1*1*(-5).
  const double expected = 0.5 * 5 + 0.25 * 10 + 1.0 * (-3) + 3.0 * (-10) + 2.0 * 2 * 7 + 1.0 * 1 * (-5);
  EXPECT_NEAR(apply_generator(s, p, f, State({2, 1})), expected, 1e-12);
}

TEST(Potential, TwoNodeClosedForm) {
  NetworkParams p{{0.7, 0.4}, {1.1, 0.6}};
  auto m = two_node_model(2, 1, p);
  const Eigen::Vector2d pi = m.spectral().stationary();
  for (double a : {-0.9, -0.3, 0.2, 1.5, 40.0}) {
    Eigen::Vector2d v(a, -a * pi(0) / pi(1));
    if ((v.array() + 1.0 <= 0).any()) continue;
    PotentialValue pv = m.potential0(v);
    EXPECT_NEAR(pv.value, potential_two_node(v, 3.0, p), 1e-11 * std::max(1.0, std::abs(pv.value))) << a;
    EXPECT_LT(pv.error, 1e-9);
  }
  EXPECT_DOUBLE_EQ(m.potential0(Eigen::Vector2d::Zero()).value, 0.0);
  EXPECT_THROW(m.potential0(Eigen::Vector2d(1.0, 1.0)), MartingaleError);
}

TEST(Potential, DomainViolation) {
  auto m = two_node_model(1, 1, {{1, 1}, {1, 1}});
  try {
    m.potential0(Eigen::Vector2d(-1.5, 1.5));
    FAIL();
  } catch (const MartingaleError& e) {
    EXPECT_EQ(e.kind(), MartingaleErrc::DomainViolation);
  }
}

// (d/dt + Omega) h_v = 0, checked by central differences in t.
class Harmonicity : public ::testing::TestWithParam<int> {};

TEST_P(Harmonicity, GeneratorAnnihilatesSpaceTimeHarmonic) {
  std::mt19937_64 g(77 + static_cast<unsigned>(GetParam()));
  const int n = 2 + GetParam() % 3;
  auto s = validate(RateMatrix(mobnet::testing::random_rate_matrix(n, g)));
  std::uniform_real_distribution<double> r(0.2, 1.5);
  NetworkParams p;
  for (int i = 0; i < n; ++i) {
    p.arrival.push_back(r(g));
    p.capacity.push_back(r(g));
  }
  MartingaleModel m(s, p);

  // v in H with small entries so the flow stays admissible near t.
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, -0.3, 0.4);
  v.array() -= s.stationary().dot(v);
  const double t = 0.15, dt = 1e-4;
  ASSERT_TRUE(m.in_domain(v, t + dt));
  for (const State& x : {State(std::vector<std::int64_t>(static_cast<std::size_t>(n), 1)),
                         State(std::vector<std::int64_t>(static_cast<std::size_t>(n), 3))}) {
    auto h = [&](double tt) { return m.harmonic_h(v, tt, x); };
    const double dh = (h(t + dt) - h(t - dt)) / (2 * dt);
    const double om = apply_generator(s, p, [&](const State& y) { return m.harmonic_h(v, t, y); }, x);
    EXPECT_NEAR(dh + om, 0.0, 1e-6 * std::max(1.0, std::abs(h(t)))) << "n=" << n;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, Harmonicity, ::testing::Range(0, 6));

TEST(Harmonic, AnchoredPrimitiveOffHyperplane) {
  // v = (u - 1) 1 is outside H; phi is constant and h_v = e^{t sum(mu (u-1)/u - lambda (u-1))} u^{|x|}.
  NetworkParams p{{0.7, 0.4}, {1.1, 0.6}};
  auto m = two_node_model(2, 1, p);
  const double u = 0.8, t = 0.6;
  Eigen::Vector2d v(u - 1, u - 1);
  double rate = 0;
  for (int i = 0; i < 2; ++i) rate += p.capacity[i] * (u - 1) / u - p.arrival[i] * (u - 1);
  const State x({3, 2});
  EXPECT_NEAR(m.harmonic_h(v, t, x), std::exp(rate * t) * std::pow(u, 5), 1e-12);
}

TEST(Psi, VanishesOnlyAtStationaryDirection) {
  auto s = validate(RateMatrix(mobnet::testing::cycle3()));
  MartingaleModel m(s, {{1, 1, 1}, {1, 1, 1}});
  EXPECT_NEAR(m.F(s.stationary()), 0.0, 1e-14);
  EXPECT_GT(m.F(Eigen::Vector3d(0.5, 0.3, 0.2)), 1e-4);
  // psi(P_{-t} v) = e^{theta t} psi(v): each coefficient scales by e^{-theta_j t}.
  Eigen::Vector3d v(0.3, -0.1, -0.2);
  EXPECT_NEAR(m.psi(s.apply(-0.4, v)), std::exp(s.trace_rate() * 0.4) * m.psi(v), 1e-12);
}

TEST(Chart, RoundTripAndJacobian) {
  std::mt19937_64 g(5);
  auto s = validate(RateMatrix(mobnet::testing::random_rate_matrix(4, g)));
  SimplexChart c(s);
  Eigen::Vector3d u(0.05, -0.02, 0.01);
  for (double t : {0.0, 0.3, 1.2}) {
    Eigen::VectorXd y = c.forward(t, u);
    EXPECT_LT((c.inverse(t, y) - u).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(c.linear_part(t).determinant(), c.jacobian(t), 1e-10 * c.jacobian(t));
    // Psi_t is affine: forward(u) = forward(0) + D Psi_t u.
    EXPECT_LT((y - c.forward(t, Eigen::Vector3d::Zero()) - c.linear_part(t) * u).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_TRUE(SimplexChart::in_open_simplex(Eigen::Vector2d(0.3, 0.3)));
  EXPECT_FALSE(SimplexChart::in_open_simplex(Eigen::Vector2d(0.7, 0.3)));
}
