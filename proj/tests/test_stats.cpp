#include <gtest/gtest.h>

#include <random>

#include "mobnet/stats.hpp"

using namespace mobnet;

TEST(Stats, MeanSe) {
  MeanSe m = mean_se({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(m.n, 4);
}

TEST(Stats, Quantile) {
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.0), 1.0);
}

TEST(Stats, FisherOneSided) {
  // Hypergeometric tail P(K >= 6) with 7 successes among 20 draws split 10/10:
  // 0.0286377709.
  EXPECT_NEAR(proportion_increase_pvalue(1, 10, 6, 10), 0.0286377709, 1e-8);
  EXPECT_NEAR(proportion_increase_pvalue(5, 10, 5, 10), 0.6718591, 1e-6);
  // Boundary of the hypergeometric support: the p-value is exactly one.
  EXPECT_EQ(proportion_increase_pvalue(100, 100, 99, 100), 1.0);
  EXPECT_EQ(proportion_increase_pvalue(3, 3, 0, 5), 1.0);
}

TEST(Stats, ClopperPearson) {
  // Upper 95% one-sided bound with no successes: 1 - 0.05^{1/n}.
  EXPECT_NEAR(clopper_pearson_upper(0, 30), 1.0 - std::pow(0.05, 1.0 / 30), 1e-12);
  EXPECT_DOUBLE_EQ(clopper_pearson_upper(30, 30), 1.0);
}

TEST(Stats, HomogeneityTestsCalibrated) {
  std::mt19937_64 g(1);
  std::poisson_distribution<int> pois(4.0);
  std::normal_distribution<double> nd;
  int chi_rejects = 0, ks_rejects = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::int64_t> a, b;
    std::vector<double> c, d;
    for (int k = 0; k < 300; ++k) {
      a.push_back(pois(g));
      b.push_back(pois(g));
      c.push_back(nd(g));
      d.push_back(nd(g));
    }
    if (chi_square_two_sample_pvalue(a, b) < 0.05) ++chi_rejects;
    if (ks_two_sample_pvalue(c, d) < 0.05) ++ks_rejects;
  }
  EXPECT_LT(chi_rejects, 22);
  EXPECT_LT(ks_rejects, 22);

  std::vector<std::int64_t> a, b;
  std::poisson_distribution<int> shifted(5.0);
  for (int k = 0; k < 500; ++k) {
    a.push_back(pois(g));
    b.push_back(shifted(g));
  }
  EXPECT_LT(chi_square_two_sample_pvalue(a, b), 1e-3);
}
