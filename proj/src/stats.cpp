#include "mobnet/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/hypergeometric.hpp>
#include <cmath>
#include <map>

namespace mobnet {

namespace {

struct Neumaier {
  double sum = 0, c = 0;
  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      c += (sum - t) + v;
    else
      c += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  r.n = static_cast<long>(xs.size());
  if (xs.empty()) return r;
  Neumaier s;
  for (double v : xs) s.add(v);
  r.mean = s.value() / static_cast<double>(r.n);
  if (r.n < 2) return r;
  Neumaier q;
  for (double v : xs) q.add((v - r.mean) * (v - r.mean));
  r.se = std::sqrt(q.value() / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
  return r;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double proportion_increase_pvalue(long k_a, long n_a, long k_b, long n_b) {
  // Conditional on the total number of successes, k_b is hypergeometric.
  const auto total = static_cast<unsigned>(k_a + k_b);
  const auto n = static_cast<unsigned>(n_a + n_b);
  boost::math::hypergeometric_distribution<double> h(total, static_cast<unsigned>(n_b), n);
  // P(K >= k_b) = 1 when k_b is at or below the support's lower end.
  const long lower = std::max(0L, k_a + k_b + n_b - n_a - n_b);
  if (k_b <= lower) return 1.0;
  return boost::math::cdf(boost::math::complement(h, static_cast<unsigned>(k_b - 1)));
}

double clopper_pearson_upper(long k, long n, double level) {
  if (k >= n) return 1.0;
  return boost::math::binomial_distribution<double>::find_upper_bound_on_p(
      static_cast<double>(n), static_cast<double>(k), 1.0 - level);
}

double chi_square_two_sample_pvalue(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::map<std::int64_t, std::pair<double, double>> counts;
  for (auto v : a) counts[v].first += 1;
  for (auto v : b) counts[v].second += 1;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double frac_a = na / (na + nb), frac_b = nb / (na + nb);
  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> acc{0, 0};
  for (const auto& [value, c] : counts) {
    (void)value;
    acc.first += c.first;
    acc.second += c.second;
    const double tot = acc.first + acc.second;
    if (tot * frac_a >= 5 && tot * frac_b >= 5) {
      cells.push_back(acc);
      acc = {0, 0};
    }
  }
  if (acc.first + acc.second > 0) {
    if (cells.empty()) cells.push_back(acc);
    else {
      cells.back().first += acc.first;
      cells.back().second += acc.second;
    }
  }
  if (cells.size() < 2) return 1.0;
  double stat = 0;
  for (const auto& c : cells) {
    const double tot = c.first + c.second;
    const double ea = tot * frac_a, eb = tot * frac_b;
    stat += (c.first - ea) * (c.first - ea) / ea + (c.second - eb) * (c.second - eb) / eb;
  }
  boost::math::chi_squared_distribution<double> chi(static_cast<double>(cells.size() - 1));
  return boost::math::cdf(boost::math::complement(chi, stat));
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lam = (ne + 0.12 + 0.11 / ne) * d;
  if (lam < 0.2) return 1.0;
  // Kolmogorov tail series.
  double p = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace mobnet
