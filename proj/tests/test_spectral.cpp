#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "mobnet/spectral.hpp"
#include "test_helpers.hpp"

using namespace mobnet;
using mobnet::testing::random_rate_matrix;

TEST(RateMatrix, RejectsBadInput) {
  Eigen::MatrixXd rect(2, 3);
  rect.setZero();
  EXPECT_THROW(RateMatrix{rect}, SpectralError);

  Eigen::MatrixXd neg(2, 2);
  neg << 1, -1, 1, -1;
  try {
    RateMatrix{neg};
    FAIL();
  } catch (const SpectralError& e) {
    EXPECT_EQ(e.kind(), SpectralErrc::InvalidRate);
  }

  Eigen::MatrixXd rows(2, 2);
  rows << -1, 2, 1, -1;
  try {
    RateMatrix{rows};
    FAIL();
  } catch (const SpectralError& e) {
    EXPECT_EQ(e.kind(), SpectralErrc::RowSumViolation);
  }
}

TEST(RateMatrix, FillsMissingDiagonal) {
  auto r = RateMatrix::from_rows({{std::nullopt, 2.0}, {1.0, std::nullopt}});
  EXPECT_DOUBLE_EQ(r.rate(0, 0), -2.0);
  EXPECT_DOUBLE_EQ(r.rate(1, 1), -1.0);
}

TEST(Validate, RejectsReducible) {
  Eigen::MatrixXd q(2, 2);
  q << -1, 1, 0, 0;
  try {
    validate(RateMatrix(q));
    FAIL();
  } catch (const SpectralError& e) {
    EXPECT_EQ(e.kind(), SpectralErrc::NotIrreducible);
  }
}

TEST(Validate, RejectsDefective) {
  // Double eigenvalue -3 with a one-dimensional eigenspace.
  Eigen::MatrixXd q(3, 3);
  q << -1, 1, 0, 0, -1, 1, 4, 0, -4;
  try {
    validate(RateMatrix(q));
    FAIL();
  } catch (const SpectralError& e) {
    EXPECT_EQ(e.kind(), SpectralErrc::NotDiagonalizable);
  }
}

TEST(Validate, TwoNodeClosedForm) {
  // Q = [[-a, a], [b, -b]]: pi = (b, a)/(a+b), P_t = Pi + e^{-(a+b)t}(I - Pi).
  const double a = 2, b = 1;
  auto s = validate(RateMatrix(mobnet::testing::two_node(a, b)));
  EXPECT_NEAR(s.stationary()(0), 1.0 / 3, 1e-12);
  EXPECT_NEAR(s.stationary()(1), 2.0 / 3, 1e-12);
  EXPECT_NEAR(s.gap(), 3.0, 1e-12);
  EXPECT_NEAR(s.trace_rate(), 3.0, 1e-12);
  EXPECT_NEAR(std::abs(s.eigenvalues()(1)), 0.0, 1e-12);
  Eigen::MatrixXd pi_mat(2, 2);
  pi_mat << 1.0 / 3, 2.0 / 3, 1.0 / 3, 2.0 / 3;
  Eigen::MatrixXd expected = pi_mat + std::exp(-3.0) * (Eigen::MatrixXd::Identity(2, 2) - pi_mat);
  EXPECT_LT((s.semigroup(1.0) - expected).cwiseAbs().maxCoeff(), 1e-12);
  // |(P_t - Pi) e^{eta t}| = |I - Pi| whose largest entry is 2/3.
  EXPECT_NEAR(mixing_ratio_sup(s), 2.0 / 3, 1e-9);
  EXPECT_NEAR(s.mixing_prefactor(), 1.1 * 2.0 / 3, 1e-9);
}

TEST(Validate, ThreeCycleComplexSpectrum) {
  auto s = validate(RateMatrix(mobnet::testing::cycle3()));
  EXPECT_FALSE(s.is_real());
  EXPECT_NEAR(s.gap(), 1.5, 1e-12);
  EXPECT_NEAR(s.trace_rate(), 3.0, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.stationary()(i), 1.0 / 3, 1e-12);
  // Conjugate pair, positive imaginary part first.
  EXPECT_NEAR(s.eigenvalues()(0).imag(), std::sqrt(3.0) / 2, 1e-12);
  EXPECT_NEAR(s.eigenvalues()(1).imag(), -std::sqrt(3.0) / 2, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(s.eigenvectors()(i, 2) - 1.0), 0.0, 1e-12);
}

TEST(Validate, RepeatedEigenvalueDiagonalizable) {
  auto s = validate(RateMatrix(mobnet::testing::complete3()));
  EXPECT_NEAR(s.gap(), 3.0, 1e-10);
  EXPECT_NEAR(s.eigenvalues()(0).real(), -3.0, 1e-10);
  EXPECT_NEAR(s.eigenvalues()(1).real(), -3.0, 1e-10);
  const Eigen::MatrixXd expected = (mobnet::testing::complete3() * 0.7).exp();
  EXPECT_LT((s.semigroup(0.7) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

// Properties on random generators, checked against Eigen's matrix exponential.
class RandomGenerators : public ::testing::TestWithParam<int> {};

TEST_P(RandomGenerators, SemigroupProperties) {
  std::mt19937_64 g(1000 + static_cast<unsigned>(GetParam()));
  const int n = 2 + GetParam() % 5;
  const Eigen::MatrixXd q = random_rate_matrix(n, g);
  auto s = validate(RateMatrix(q));
  const Eigen::VectorXd& pi = s.stationary();

  EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
  EXPECT_GT(pi.minCoeff(), 0.0);
  EXPECT_LT((pi.transpose() * q).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(s.trace_rate(), -q.trace(), 1e-12);

  for (double t : {0.1, 0.5, 2.0}) {
    const Eigen::MatrixXd pt = s.semigroup(t);
    const Eigen::MatrixXd oracle = (q * t).exp();
    EXPECT_LT((pt - oracle).cwiseAbs().maxCoeff(), 1e-10) << "t=" << t;
    EXPECT_LT((pt.rowwise().sum() - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((s.semigroup(-t) * pt - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((s.evolve(pi, t) - pi).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
    EXPECT_LT((s.apply(t, v) - oracle * v).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_LT((s.semigroup(0.3) * s.semigroup(0.4) - s.semigroup(0.7)).cwiseAbs().maxCoeff(), 1e-10);

  // The gap is the smallest |Re| among non-zero eigenvalues.
  double gap = 1e300;
  for (int j = 0; j + 1 < n; ++j) gap = std::min(gap, -s.eigenvalues()(j).real());
  EXPECT_NEAR(s.gap(), gap, 1e-12);

  // Mixing bound holds on an independent grid.
  const double b = s.mixing_prefactor();
  Eigen::MatrixXd pi_mat = Eigen::VectorXd::Ones(n) * pi.transpose();
  for (int k = 0; k <= 200; ++k) {
    const double t = k * 0.037;
    const double dev = ((q * t).exp() - pi_mat).cwiseAbs().maxCoeff();
    EXPECT_LE(dev, b * std::exp(-s.gap() * t) + 1e-12) << "t=" << t;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomGenerators, ::testing::Range(0, 20));
