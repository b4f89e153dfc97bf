#pragma once

#include <cstdint>
#include <vector>

namespace mobnet {

struct MeanSe {
  double mean = 0;
  double se = 0;
  long n = 0;
};

// Mean and standard error with compensated (Neumaier) accumulation.
MeanSe mean_se(const std::vector<double>& xs);

// Linearly interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

// One-sided Fisher exact p-value for H1: p_b > p_a, given k successes out of n in each group.
double proportion_increase_pvalue(long k_a, long n_a, long k_b, long n_b);

// Exact one-sided upper confidence bound for a binomial proportion.
double clopper_pearson_upper(long k, long n, double level = 0.95);

// Chi-square homogeneity test of two integer samples; adjacent values are pooled
// until each cell has expected count >= 5 in both samples.
double chi_square_two_sample_pvalue(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

}  // namespace mobnet
