#include "mobnet/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "mobnet/experiments.hpp"
#include "mobnet/martingale.hpp"
#include "mobnet/parallel.hpp"
#include "mobnet/scaling.hpp"

namespace mobnet {

namespace {

struct Verdict {
  bool passed;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

SpectralData uniform_q(int n, double exit_rate) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(n, n, exit_rate / (n - 1));
  q.diagonal().setConstant(-exit_rate);
  return validate(RateMatrix(q));
}

NetworkParams even(int n, double lambda, double mu) {
  return {std::vector<double>(static_cast<std::size_t>(n), lambda / n),
          std::vector<double>(static_cast<std::size_t>(n), mu / n)};
}

NetworkParams random_params(int n, std::mt19937_64& g) {
  std::uniform_real_distribution<double> r(0.2, 1.5);
  NetworkParams p;
  for (int i = 0; i < n; ++i) {
    p.arrival.push_back(r(g));
    p.capacity.push_back(r(g));
  }
  return p;
}

std::string failures(const SuiteReport& r) {
  std::string out;
  for (const auto& c : r.checks)
    if (!c.passed) out += (out.empty() ? "" : "; ") + c.name + " = " + fmt(c.measured) + " > " + fmt(c.limit);
  return out;
}

// 1
Verdict identities(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::ostringstream os;
  bool ok = true;
  for (int n : {2, 3, 4}) {
    const SpectralData s = validate(RateMatrix(random_rate_matrix(n, g)));
    SuiteReport r = algebraic_identities(s, random_params(n, g), g());
    double worst = 0;
    for (const auto& c : r.checks)
      if (c.limit < 1) worst = std::max(worst, c.measured / c.limit);
    os << (n > 2 ? ", " : "") << "n=" << n << " worst/limit " << fmt(worst, 2);
    if (!r.passed()) {
      ok = false;
      os << " [" << failures(r) << "]";
    }
  }
  return {ok, os.str()};
}

// 2
Verdict harmonicity(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> count(1, 6);
  constexpr double kTolH = 1e-6;
  double worst_h = 0;
  int points = 0;
  while (points < 100) {
    const int n = 2 + points % 3;
    const SpectralData s = validate(RateMatrix(random_rate_matrix(n, g)));
    const NetworkParams p = random_params(n, g);
    const MartingaleModel m(s, p);
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = 0.3 * gauss(g);
      v.array() -= s.stationary().dot(v);
      const double t = unit(g);
      if (!m.in_domain(v, t)) continue;
      std::vector<std::int64_t> c(static_cast<std::size_t>(n));
      for (auto& ci : c) ci = count(g);
      const State x(c);
      auto h = [&](double tt) { return m.harmonic_h(v, tt, x); };
      const double om = apply_generator(s, p, [&](const State& y) { return m.harmonic_h(v, t, y); }, x);
      // Five-point stencil; the step shrinks with the distance of 1 + phi from
      // zero and with the time scale |h / dh/dt| = |h / Omega h|.
      const double dt =
          2e-3 * std::min({1.0, 1.0 + m.flow(v, t).minCoeff(), std::abs(h(t)) / std::max(std::abs(om), 1e-300)});
      if (!m.in_domain(v, t + 2 * dt) || !m.in_domain(v, t - 2 * dt)) continue;
      const double dh = (-h(t + 2 * dt) + 8 * h(t + dt) - 8 * h(t - dt) + h(t - 2 * dt)) / (12 * dt);
      worst_h = std::max(worst_h, std::abs(dh + om) / std::abs(h(t)));
      ++points;
    }
  }

  // g for two nodes, differences taken on whole slices.
  constexpr double kDtG = 1e-4, kTolG = 1e-4;
  Eigen::Matrix2d q;
  q << -0.8, 0.8, 1.3, -1.3;
  const SpectralData s = validate(RateMatrix(q));
  const NetworkParams p{{0.6, 0.5}, {0.9, 1.2}};
  const MartingaleModel m(s, p);
  double worst_g = 0;
  int g_points = 0;
  for (double alpha : {0.4, 0.9}) {
    const DirectHarmonic2 dg(m, alpha);
    for (double t : {0.1, 0.6}) {
      const auto lo = dg.at(t - kDtG), mid = dg.at(t), hi = dg.at(t + kDtG);
      for (const State& x : {State({1, 1}), State({2, 5}), State({4, 1}), State({3, 3}), State({6, 2})}) {
        const double gx = mid(x);
        const double dgdt = (hi(x) - lo(x)) / (2 * kDtG);
        const double om = apply_generator(s, p, [&](const State& y) { return mid(y); }, x);
        worst_g = std::max(worst_g, std::abs(dgdt + om) / std::abs(gx));
        ++g_points;
      }
    }
  }
  return {worst_h <= kTolH && worst_g <= kTolG,
          "h: 100 points, worst " + fmt(worst_h, 2) + " (limit " + fmt(kTolH) + "); g: " + std::to_string(g_points) +
              " points, worst " + fmt(worst_g, 2) + " (limit " + fmt(kTolG) + ")"};
}

// 3
Verdict couplings(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  const SpectralData s = validate(RateMatrix(random_rate_matrix(3, g)));
  const NetworkParams p = random_params(3, g);
  SuiteReport r = pathwise_couplings(s, p, 1000, 5.0, g());
  double violations = 0;
  for (const auto& c : r.checks) violations += c.measured;
  return {r.passed(), std::to_string(r.checks.size()) + " checks x 1000 paths, violations " + fmt(violations) +
                          (r.passed() ? "" : " [" + failures(r) + "]")};
}

// 4
Verdict constancy(std::uint64_t seed) {
  Eigen::Matrix2d q;
  q << -1, 1, 1, -1;
  const MartingaleModel m(validate(RateMatrix(q)), even(2, 1.0, 2.0));
  std::ostringstream os;
  bool ok = true;
  for (double alpha : {0.3, 0.7}) {
    ConstancyReport r =
        martingale_constancy_check(m, State({5, 5}), alpha, {0.0, 0.25, 0.5, 1.0}, 10000, derive_seed(seed, {0}));
    ok = ok && r.passed;
    os << (alpha > 0.5 ? "; " : "") << "alpha=" << alpha << " means";
    for (const auto& row : r.rows) os << ' ' << fmt(row.mean, 5);
    os << " max z " << fmt(r.max_z, 3);
  }
  return {ok, os.str() + " (limit 3)"};
}

// 5
Verdict deviation_bound(std::uint64_t seed) {
  Eigen::Matrix2d q;
  q << -1, 1, 1, -1;
  const MartingaleModel m(validate(RateMatrix(q)), even(2, 1.0, 2.0));
  DeviationBoundReport r =
      deviation_bound_check(m, State({10, 10}), 0.03, 0.01, {0.25, 0.5, 1.0}, {0, 10, 20}, 2000, 50.0, seed);
  double worst = 0;
  for (const auto& row : r.rows) worst = std::max(worst, row.upper / row.bound);
  return {r.passed, "9 (alpha, ell) cells, worst upper/bound " + fmt(worst, 3) + ", C_delta " +
                        fmt(r.constants.c_delta, 4) + ", exits " + std::to_string(r.exits) + "/" +
                        std::to_string(r.paths)};
}

// 6
Verdict fluid(std::uint64_t seed) {
  const SpectralData s = uniform_q(3, 0.05);
  std::ostringstream os;
  bool ok = true;
  struct Case {
    double lambda, mu;
    Regime regime;
  };
  for (const Case& c : {Case{2, 1, Regime::Supercritical}, Case{1, 2, Regime::Subcritical},
                        Case{1, 1, Regime::Critical}}) {
    ScalingPlan plan;
    plan.ladder = {100, 1000};
    plan.replicas = 50;
    plan.horizon = 2.0;
    plan.window_start = 0.1;
    plan.scale = 1.0;
    plan.seed = derive_seed(seed, {static_cast<std::uint64_t>(c.regime)});
    DeviationReport r = fluid_run(plan, s, even(3, c.lambda, c.mu), c.regime);
    ok = ok && r.passed;
    const auto& a = r.levels.front();
    const auto& b = r.levels.back();
    os << (c.lambda == 2 ? "" : "; ") << to_string(c.regime) << " within " << fmt(b.within_fraction, 2)
       << " median " << fmt(a.median, 3) << " -> " << fmt(b.median, 3) << (r.passed ? "" : " FAIL");
  }
  return {ok, os.str() + " (need within >= 0.95 at tolerance 0.1)"};
}

// 7
Verdict drift(std::uint64_t seed) {
  Eigen::Matrix2d q;
  q << -1, 1, 1, -1;
  DriftReport r = drift_ensemble(validate(RateMatrix(q)), even(2, 2.0, 1.0), State::zeros(2), 2000.0, 100, seed, 0.05);
  return {r.within_fraction >= 0.95,
          std::to_string(r.within) + "/100 paths within 0.05 at t = 2000 (need 95)"};
}

// 8
Verdict trapping(std::uint64_t seed) {
  ScalingPlan plan;
  plan.ladder = {50, 200, 800};
  plan.replicas = 30;
  plan.horizon = 50;
  plan.seed = seed;
  ProportionReport r = trapping_run(plan, uniform_q(2, 0.1), even(2, 0.2, 0.1), 0.02, 0.01);
  std::ostringstream os;
  os << "survival";
  for (const auto& l : r.levels) os << ' ' << l.events << '/' << l.trials;
  os << ", one-sided p " << fmt(r.trend_pvalue, 2);
  return {r.passed, os.str()};
}

// 9
Verdict homogenization(std::uint64_t seed) {
  ScalingPlan plan;
  plan.ladder = {32, 256, 2048};
  plan.replicas = 100;
  plan.delta_exponent = 0.25;
  plan.seed = seed;
  NetworkParams p{{60, 0, 0}, {0.5 / 3, 0.5 / 3, 0.5 / 3}};
  HittingReport r = hitting_time_run(plan, uniform_q(3, 1.0), p);
  std::ostringstream os;
  os << "exceedance";
  for (const auto& l : r.unnormalized.levels) os << ' ' << l.events << '/' << l.trials;
  os << ", p " << fmt(r.unnormalized.trend_pvalue, 2) << "; closed upper/bound";
  for (const auto& l : r.closed.levels) os << ' ' << fmt(l.upper / l.reference, 2);
  return {r.unnormalized.trend_holds && r.closed.bound_holds, os.str()};
}

// 10
Verdict ergodicity(std::uint64_t seed) {
  Eigen::Matrix2d q;
  q << -1, 1, 1, -1;
  ScalingPlan plan;
  plan.ladder = {100, 300, 1000};
  plan.replicas = 100;
  plan.horizon = 1.0;
  plan.tolerance = 0.1;
  plan.seed = derive_seed(seed, {0});
  ErgodicityReport sub = ergodicity_probe(plan, validate(RateMatrix(q)), even(2, 1.0, 2.0));
  plan.seed = derive_seed(seed, {1});
  ErgodicityReport sup = population_probe(plan, uniform_q(3, 1.0), even(3, 2.0, 1.0));
  bool grows = true;
  for (std::size_t k = 1; k < sup.levels.size(); ++k) grows = grows && sup.levels[k].raw_max > sup.levels[k - 1].raw_max;
  std::ostringstream os;
  os << "subcritical max mean";
  for (const auto& l : sub.levels) os << ' ' << fmt(l.max_mean, 3);
  os << " (final < 0.1); supercritical E[L(NT)]";
  for (const auto& l : sup.levels) os << ' ' << fmt(l.raw_max, 4);
  return {sub.passed && grows, os.str()};
}

// 11
Verdict entropy(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  std::ostringstream os;
  bool ok = true;
  for (int k = 0; k < 5; ++k) {
    const int n = 2 + k % 3;
    Eigen::VectorXd pi(n);
    for (int i = 0; i < n; ++i) pi(i) = gamma(g) + 0.05;
    pi /= pi.sum();
    try {
      EntropyConstants c = entropy_constants(pi);
      ok = ok && c.grid_step <= 0.01 + 1e-15;
      os << (k ? ", " : "") << "n=" << n << " step " << c.grid_step << " (" << c.grid_points << " points)";
    } catch (const StateError& e) {
      ok = false;
      os << (k ? ", " : "") << "n=" << n << " " << e.what();
    }
  }
  return {ok, os.str()};
}

// 12
Verdict integrability(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  constexpr double kRelChange = 0.05;
  std::ostringstream os;
  bool ok = true;
  for (int n : {2, 3}) {
    const SpectralData s = validate(RateMatrix(random_rate_matrix(n, g)));
    auto rows = integrability_bound(s, {0.1, 0.3, 0.5, 1.0});
    double worst = 0, top = 0;
    for (const auto& r : rows) {
      worst = std::max(worst, r.relative_change);
      top = std::max(top, r.fine);
      ok = ok && std::isfinite(r.fine) && r.fine > 0;
    }
    ok = ok && worst < kRelChange;
    os << (n > 2 ? "; " : "") << "n=" << n << " max change " << fmt(worst, 2) << ", max value " << fmt(top, 4);
  }
  return {ok, os.str() + " (limit " + fmt(kRelChange) + ")"};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;
  Verdict (*run)(std::uint64_t);
};

const Criterion kCriteria[] = {
    {1, "exact algebraic identities", 10, identities},
    {2, "space-time harmonicity of h_v and g", 60, harmonicity},
    {3, "exact pathwise couplings", 120, couplings},
    {4, "stopped J_alpha has constant mean", 600, constancy},
    {5, "exit-time deviation bound", 0, deviation_bound},
    {6, "fluid limits in three regimes", 600, fluid},
    {7, "long-run drift X(t)/t", 0, drift},
    {8, "entropy trapping trend", 0, trapping},
    {9, "homogenization schedule", 0, homogenization},
    {10, "subcritical ergodicity probe", 0, ergodicity},
    {11, "entropy constants certification", 0, entropy},
    {12, "integrability bound", 0, integrability},
};

}  // namespace

std::vector<CriterionResult> run_acceptance(std::uint64_t seed, const std::vector<int>& only,
                                            const CriterionSink& sink) {
  std::vector<CriterionResult> out;
  for (const Criterion& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(derive_seed(seed, {static_cast<std::uint64_t>(c.id)}));
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      v.passed = false;
      v.detail += "; over time limit " + fmt(c.time_limit) + " s";
    }
    out.push_back({c.id, c.name, v.passed, v.detail, secs, c.time_limit});
    if (sink) sink(out.back());
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << std::setw(4) << r.id << "  " << r.name << "  (" << std::fixed
     << std::setprecision(1) << r.seconds << " s)  " << r.detail;
  return os.str();
}

}  // namespace mobnet
