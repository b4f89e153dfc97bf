#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <random>

#include "mobnet/flow.hpp"
#include "mobnet/martingale.hpp"
#include "test_helpers.hpp"

using namespace mobnet;

namespace {

MartingaleModel random_model(int n, unsigned seed) {
  std::mt19937_64 g(seed);
  auto s = validate(RateMatrix(mobnet::testing::random_rate_matrix(n, g)));
  std::uniform_real_distribution<double> r(0.2, 1.2);
  NetworkParams p;
  for (int i = 0; i < n; ++i) {
    p.arrival.push_back(r(g));
    p.capacity.push_back(r(g));
  }
  return MartingaleModel(s, p);
}

}  // namespace

// J_alpha is space-time harmonic: d/dt J + Omega J = 0.
class JHarmonic : public ::testing::TestWithParam<std::tuple<int, double>> {};

TEST_P(JHarmonic, GeneratorAnnihilatesJ) {
  const auto [n, alpha] = GetParam();
  MartingaleModel m = random_model(n, 40 + static_cast<unsigned>(n));
  JAlpha j(m, alpha);
  const double t = 0.4, dt = 1e-4;
  std::vector<std::int64_t> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = 2 + i;
  const State x(c);
  const int lvl = 2;
  const double jx = j.at_level(x, t, lvl);
  const double dj = (j.at_level(x, t + dt, lvl) - j.at_level(x, t - dt, lvl)) / (2 * dt);
  const double om = apply_generator(m.spectral(), m.params(), [&](const State& y) { return j.at_level(y, t, lvl); }, x);
  EXPECT_NEAR(dj + om, 0.0, 1e-6 * jx);
  // Relative-entropy form is the same number.
  EXPECT_NEAR(j.entropy_form_at_level(x, t, lvl), jx, 1e-10 * jx);
}

INSTANTIATE_TEST_SUITE_P(Grid, JHarmonic,
                         ::testing::Combine(::testing::Values(2, 3), ::testing::Values(0.3, 1.0)));

TEST(JAlpha, Converges) {
  MartingaleModel m = random_model(3, 9);
  JAlpha j(m, 0.5);
  JValue v = j(State({4, 2, 3}), 0.0);
  EXPECT_FALSE(v.monte_carlo);
  EXPECT_GT(v.value, 0.0);
  EXPECT_LE(v.error, 1e-8 * v.value);
}

TEST(JAlpha, MatchesDirectChartIntegral) {
  // g(t, x) prod_{i<n} pi_i = J_alpha(t, x) for two nodes.
  MartingaleModel m = random_model(2, 21);
  const double pi0 = m.spectral().stationary()(0);
  for (double alpha : {0.4, 1.0}) {
    JAlpha j(m, alpha);
    DirectHarmonic2 g(m, alpha);
    for (double t : {0.0, 0.5}) {
      auto slice = g.at(t);
      for (const State& x : {State({0, 0}), State({3, 1}), State({5, 7})}) {
        const double jv = j(x, t).value;
        EXPECT_NEAR(slice(x) * pi0, jv, 1e-7 * jv) << "alpha=" << alpha << " t=" << t;
      }
    }
  }
}

TEST(JAlpha, MonteCarloAboveTensorThreshold) {
  MartingaleModel m = random_model(3, 5);
  JAlphaOptions opt;
  opt.tensor_max_n = 2;
  opt.mc_samples = 50000;
  JAlpha mc(m, 0.6, opt);
  JAlpha exact(m, 0.6);
  const State x({1, 2, 1});
  JValue a = mc(x, 0.2), b = exact(x, 0.2);
  EXPECT_TRUE(a.monte_carlo);
  EXPECT_NEAR(a.value, b.value, 5 * a.error);
}

TEST(DeviationConstants, Positive) {
  MartingaleModel m = random_model(2, 3);
  auto c = deviation_constants(m, 0.01, 0.01);
  EXPECT_GT(c.sup_g, 0.0);
  EXPECT_GT(c.c3, 0.0);
  EXPECT_GT(c.inf_phi_delta, 0.0);
  EXPECT_LE(c.beta, 1.0);
  EXPECT_NEAR(c.c_delta, c.c3 / c.b_delta, 1e-12 * c.c_delta);
}

// Two nodes: S is the segment u in (0, 1), u~ = (u, 1 - u). Tanh-sinh on each
// side of pi_1, where F vanishes, gives an independent value of J_alpha(0, x).
TEST(JAlpha, TwoNodeSegmentOracle) {
  auto s = validate(RateMatrix(mobnet::testing::two_node(0.7, 1.9)));
  for (const NetworkParams& p : {NetworkParams{{0, 0}, {0, 0}}, NetworkParams{{0.4, 0.3}, {1.0, 0.8}}}) {
    MartingaleModel m(s, p);
    const Eigen::VectorXd& pi = s.stationary();
    for (double alpha : {0.5, 1.0}) {
      JAlpha j(m, alpha);
      for (const State& x : {State({1, 1}), State({3, 0}), State({2, 5})}) {
        auto f = [&](double u) {
          const Eigen::Vector2d ut(u, 1 - u);
          if (ut.cwiseQuotient(pi).minCoeff() <= 1e-13) return 0.0;  // G vanishes at the ends
          return std::pow(u / pi(0), static_cast<double>(x[0])) * std::pow((1 - u) / pi(1), static_cast<double>(x[1])) *
                 m.G(ut) * std::pow(m.F(ut), alpha - 1);
        };
        boost::math::quadrature::tanh_sinh<double> ts;
        const double oracle = ts.integrate(f, 0.0, pi(0)) + ts.integrate(f, pi(0), 1.0);
        const double jv = j(x, 0.0).value;
        EXPECT_NEAR(jv, oracle, 1e-7 * oracle) << "alpha=" << alpha << " lambda=" << p.total_arrival();
      }
    }
  }
}

// (d/dt + Omega) g = 0 for the direct chart integral.
TEST(DirectHarmonic2, GeneratorAnnihilatesG) {
  MartingaleModel m = random_model(2, 33);
  const double t = 0.3, dt = 1e-4;
  DirectHarmonic2 g(m, 0.6);
  const auto lo = g.at(t - dt), mid = g.at(t), hi = g.at(t + dt);
  for (const State& x : {State({1, 1}), State({2, 4}), State({5, 1})}) {
    const double dg = (hi(x) - lo(x)) / (2 * dt);
    const double om = apply_generator(m.spectral(), m.params(), [&](const State& y) { return mid(y); }, x);
    EXPECT_NEAR(dg + om, 0.0, 1e-4 * mid(x));
  }
}
