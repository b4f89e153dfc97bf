#include "mobnet/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mobnet/parallel.hpp"
#include "mobnet/stats.hpp"

namespace mobnet {

const char* to_string(StartRecipe r) {
  switch (r) {
    case StartRecipe::Proportional: return "proportional";
    case StartRecipe::Corner: return "corner";
    case StartRecipe::Custom: return "custom";
  }
  return "?";
}

void ScalingPlan::check(int n) const {
  auto fail = [](const std::string& m) { throw ScalingError(ScalingErrc::InvalidPlan, m); };
  if (ladder.empty()) fail("ladder is empty");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (ladder[k] <= 0) fail("ladder entries must be positive");
    if (k > 0 && ladder[k] <= ladder[k - 1]) fail("ladder must be strictly increasing");
  }
  if (replicas < 1) fail("replicas must be >= 1");
  if (!(horizon > 0)) fail("horizon must be positive");
  if (!(window_start > 0) || !(window_start < horizon)) fail("window must satisfy 0 < s < t");
  if (!(scale > 0)) fail("scale must be positive");
  if (!(delta > 0)) fail("delta must be positive");
  // delta_N -> 0 and delta_N sqrt(N) -> infinity.
  if (delta_exponent < 0 || delta_exponent >= 0.5) fail("delta exponent must lie in [0, 1/2)");
  if (!(tolerance > 0)) fail("tolerance must be positive");
  if (!(pass_fraction > 0) || pass_fraction > 1) fail("pass fraction must lie in (0, 1]");
  if (start == StartRecipe::Custom && rho.size() == 0) fail("custom start needs rho");
  if (rho.size() != 0) {
    if (rho.size() != n) fail("rho has the wrong dimension");
    check_simplex_point(rho);
  }
}

double ScalingPlan::delta_at(long n) const {
  return delta_exponent > 0 ? std::pow(static_cast<double>(n), -delta_exponent) : delta;
}

std::int64_t ScalingPlan::population(long n) const {
  return static_cast<std::int64_t>(std::floor(scale * static_cast<double>(n) + 1e-9));
}

State rounded_state(const Eigen::VectorXd& rho, std::int64_t total) {
  const auto n = static_cast<std::size_t>(rho.size());
  std::vector<std::int64_t> c(n);
  std::vector<std::pair<double, std::size_t>> rem(n);
  std::int64_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = rho(static_cast<Eigen::Index>(i)) * static_cast<double>(total);
    c[i] = static_cast<std::int64_t>(std::floor(exact));
    used += c[i];
    rem[i] = {exact - static_cast<double>(c[i]), i};
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++c[rem[k % n].second];
  return State(std::move(c));
}

std::vector<State> initial_states(const ScalingPlan& plan, const Eigen::VectorXd& pi, long n) {
  const std::int64_t total = plan.population(n);
  const int d = static_cast<int>(pi.size());
  std::vector<State> out;
  if (plan.start == StartRecipe::Corner) {
    for (int i = 0; i < d; ++i) {
      State x = State::zeros(d);
      for (std::int64_t k = 0; k < total; ++k) x.add(i);
      out.push_back(std::move(x));
    }
  } else {
    out.push_back(rounded_state(plan.rho.size() ? plan.rho : pi, total));
  }
  return out;
}

Eigen::VectorXd composition_with_entropy(const Eigen::VectorXd& pi, double h) {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(pi.size());
  e1(0) = 1.0;
  if (h <= 0) return pi;
  if (h >= relative_entropy(e1, pi))
    throw ScalingError(ScalingErrc::InvalidPlan, "entropy target exceeds the corner value");
  double lo = 0, hi = 1;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (relative_entropy(pi + mid * (e1 - pi), pi) < h ? lo : hi) = mid;
  }
  return pi + lo * (e1 - pi);
}

namespace {

struct Task {
  std::size_t level;
  int start;
  long replica;
};

std::vector<Task> make_tasks(const ScalingPlan& plan, const std::vector<std::vector<State>>& starts) {
  std::vector<Task> tasks;
  for (std::size_t l = 0; l < plan.ladder.size(); ++l)
    for (int k = 0; k < static_cast<int>(starts[l].size()); ++k)
      for (long r = 0; r < plan.replicas; ++r) tasks.push_back({l, k, r});
  return tasks;
}

RngStream task_rng(const ScalingPlan& plan, const Task& t) {
  return RngStream(derive_seed(plan.seed, {static_cast<std::uint64_t>(plan.ladder[t.level]),
                                           static_cast<std::uint64_t>(t.start),
                                           static_cast<std::uint64_t>(t.replica)}),
                   0);
}

// One-sided p-value for "more samples below the pooled median at b than at a".
double median_split_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return 1.0;
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  const double m = quantile(all, 0.5);
  auto below = [m](const std::vector<double>& v) {
    return static_cast<long>(std::count_if(v.begin(), v.end(), [m](double x) { return x < m; }));
  };
  return proportion_increase_pvalue(below(a), static_cast<long>(a.size()), below(b), static_cast<long>(b.size()));
}

void summarize(DeviationReport& rep, const ScalingPlan& plan) {
  std::vector<std::vector<double>> per(plan.ladder.size());
  for (auto& s : rep.samples) {
    const auto l = static_cast<std::size_t>(std::find(plan.ladder.begin(), plan.ladder.end(), s.n) - plan.ladder.begin());
    per[l].push_back(s.deviation);
    if (s.deviation != s.rescan) rep.rescan_agrees = false;
  }
  for (std::size_t l = 0; l < plan.ladder.size(); ++l) {
    DeviationLevel lv{};
    lv.n = plan.ladder[l];
    lv.samples = static_cast<long>(per[l].size());
    for (auto& s : rep.samples)
      if (s.n == lv.n && s.censored) ++lv.censored;
    lv.q10 = quantile(per[l], 0.1);
    lv.median = quantile(per[l], 0.5);
    lv.q90 = quantile(per[l], 0.9);
    lv.max = *std::max_element(per[l].begin(), per[l].end());
    lv.within = static_cast<long>(std::count_if(per[l].begin(), per[l].end(), [&](double d) { return d <= rep.tolerance; }));
    lv.within_fraction = static_cast<double>(lv.within) / static_cast<double>(lv.samples);
    rep.levels.push_back(lv);
  }
  rep.median_decreasing = rep.levels.size() >= 2 && rep.levels.back().median < rep.levels.front().median;
  rep.trend_pvalue = median_split_pvalue(per.front(), per.back());
  rep.passed = rep.rescan_agrees && rep.levels.back().within_fraction >= rep.pass_fraction &&
               (rep.levels.size() < 2 || rep.median_decreasing);
}

Eigen::VectorXd scaled(const State& x, double n) {
  Eigen::VectorXd v(x.size());
  for (int i = 0; i < x.size(); ++i) v(i) = static_cast<double>(x[i]) / n;
  return v;
}

// Tracks the largest deviation and where it occurs.
struct SupTracker {
  double value = 0;
  double at = 0;
  void observe(double d, double t) {
    if (d > value) {
      value = d;
      at = t;
    }
  }
};

}  // namespace

// ---------------------------------------------------------------- Kelly

DeviationReport kelly_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p) {
  plan.check(s.size());
  p.check(s.size());
  const Eigen::VectorXd rho = plan.rho.size() ? plan.rho : s.stationary();
  const double T = plan.horizon;
  const int grid = 1000;
  std::vector<std::vector<State>> starts;
  for (long n : plan.ladder) starts.push_back(initial_states(plan, s.stationary(), n));
  const auto tasks = make_tasks(plan, starts);
  std::vector<DeviationSample> out(tasks.size());
  NetworkEngine engine(s, p);

  parallel_for(tasks.size(), [&](std::size_t k) {
    const Task& task = tasks[k];
    const double n = static_cast<double>(plan.ladder[task.level]);
    RngStream rng = task_rng(plan, task);
    auto dev = [&](const State& x, double t) { return sup_norm_distance(scaled(x, n), s.evolve(rho, t)); };

    // Online pass: each constant piece at its ends and the grid points inside.
    Trajectory path(starts[task.level][task.start], T);
    State x = path.initial();
    State held = x;
    double from = 0;
    SupTracker online;
    auto piece = [&](const State& c, double a, double b) {
      online.observe(dev(c, a), a);
      for (int g = static_cast<int>(std::floor(a / T * grid)) + 1; g < grid && g * T / grid < b; ++g)
        online.observe(dev(c, g * T / grid), g * T / grid);
      online.observe(dev(c, b), b);
    };
    RunStatus st = engine.run(x, T, rng, [&](const Event& e, const State& y) {
      path.push(e);
      piece(held, from, e.time);
      held = y;
      from = e.time;
      return true;
    });
    piece(held, from, T);
    path.set_truncated(st.truncated);

    // Rescan: every breakpoint seen from both sides.
    std::vector<double> cuts;
    for (int g = 0; g <= grid; ++g) cuts.push_back(g * T / grid);
    for (auto& e : path.events()) cuts.push_back(e.time);
    std::sort(cuts.begin(), cuts.end());
    SupTracker again;
    State left = path.initial(), right = path.initial();
    std::size_t next = 0;
    const auto& ev = path.events();
    for (double c : cuts) {
      left = right;
      while (next < ev.size() && ev[next].time <= c) apply_event(right, ev[next++]);
      if (c > 0) again.observe(dev(left, c), c);
      if (c < T) again.observe(dev(right, c), c);
    }
    out[k] = {plan.ladder[task.level], task.start, task.replica, online.value, again.value, online.at, st.truncated};
  }, plan.workers);

  DeviationReport rep;
  rep.label = "kelly";
  rep.tolerance = plan.tolerance;
  rep.pass_fraction = plan.pass_fraction;
  rep.window_start = 0;
  rep.window_end = T;
  rep.samples = std::move(out);
  summarize(rep, plan);
  return rep;
}

// ---------------------------------------------------------------- fluid

Eigen::VectorXd fluid_path(const Eigen::VectorXd& pi, double a, double drift, double u) {
  return std::max(0.0, a + drift * u) * pi;
}

DeviationReport fluid_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p, Regime regime) {
  plan.check(s.size());
  p.check(s.size());
  if (regime_of(p) != regime)
    throw ScalingError(ScalingErrc::RegimeMismatch, std::string("declared regime ") + to_string(regime) +
                                                        " but parameters are " + to_string(regime_of(p)));
  const Eigen::VectorXd& pi = s.stationary();
  const double drift = p.total_arrival() - p.total_capacity();
  const double a = plan.scale;
  const double lo = plan.window_start, hi = plan.horizon;
  // The subcritical trajectory has a kink at t_a = a / (mu - lambda).
  const double kink = drift < 0 ? a / -drift : std::numeric_limits<double>::infinity();
  std::vector<std::vector<State>> starts;
  for (long n : plan.ladder) starts.push_back(initial_states(plan, pi, n));
  const auto tasks = make_tasks(plan, starts);
  std::vector<DeviationSample> out(tasks.size());
  NetworkEngine engine(s, p);

  parallel_for(tasks.size(), [&](std::size_t k) {
    const Task& task = tasks[k];
    const double n = static_cast<double>(plan.ladder[task.level]);
    RngStream rng = task_rng(plan, task);
    auto dev = [&](const State& x, double u) { return sup_norm_distance(scaled(x, n), fluid_path(pi, a, drift, u)); };

    // Online pass. The trajectory is linear on each side of the kink, so the
    // sup over a constant piece is at its clipped ends or at the kink.
    Trajectory path(starts[task.level][task.start], n * hi);
    State x = path.initial();
    State held = x;
    double from = 0;
    SupTracker online;
    auto piece = [&](const State& c, double ua, double ub) {
      const double l = std::max(ua, lo), r = std::min(ub, hi);
      if (l > r) return;
      online.observe(dev(c, l), l);
      if (kink > l && kink < r) online.observe(dev(c, kink), kink);
      online.observe(dev(c, r), r);
    };
    RunStatus st = engine.run(x, n * hi, rng, [&](const Event& e, const State& y) {
      path.push(e);
      const double u = e.time / n;
      piece(held, from, u);
      held = y;
      from = u;
      return true;
    });
    piece(held, from, hi);
    path.set_truncated(st.truncated);

    // Rescan over the breakpoints of the window.
    std::vector<double> cuts{lo, hi};
    if (kink > lo && kink < hi) cuts.push_back(kink);
    for (auto& e : path.events())
      if (e.time / n > lo && e.time / n < hi) cuts.push_back(e.time / n);
    std::sort(cuts.begin(), cuts.end());
    SupTracker again;
    State left = path.initial(), right = path.initial();
    std::size_t next = 0;
    const auto& ev = path.events();
    for (double c : cuts) {
      left = right;
      while (next < ev.size() && ev[next].time / n <= c) apply_event(right, ev[next++]);
      if (c > lo) again.observe(dev(left, c), c);
      if (c < hi) again.observe(dev(right, c), c);
    }
    out[k] = {plan.ladder[task.level], task.start, task.replica, online.value, again.value, online.at, st.truncated};
  }, plan.workers);

  DeviationReport rep;
  rep.label = std::string("fluid-") + to_string(regime);
  rep.tolerance = plan.tolerance;
  rep.pass_fraction = plan.pass_fraction;
  rep.window_start = lo;
  rep.window_end = hi;
  rep.samples = std::move(out);
  summarize(rep, plan);
  return rep;
}

void DeviationReport::write_csv(std::ostream& os) const {
  os << "fluid_time,deviation,N,replica,start,rescan,censored\n";
  os.precision(17);
  for (auto& s : samples)
    os << s.at_time << ',' << s.deviation << ',' << s.n << ',' << s.replica << ',' << s.start << ',' << s.rescan
       << ',' << (s.censored ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------- proportions

namespace {

ProportionReport tally(std::string label, const ScalingPlan& plan, std::vector<TrialRow> rows,
                       const std::vector<double>& deltas, const std::vector<double>& times,
                       const std::vector<double>& refs, bool expect_increase) {
  ProportionReport rep;
  rep.label = std::move(label);
  for (std::size_t l = 0; l < plan.ladder.size(); ++l) {
    ProportionLevel lv{};
    lv.n = plan.ladder[l];
    lv.delta = deltas[l];
    lv.time = times[l];
    lv.reference = refs[l];
    std::vector<long> ev, tr;
    for (auto& r : rows) {
      if (r.n != lv.n) continue;
      const auto st = static_cast<std::size_t>(r.start);
      if (ev.size() <= st) ev.resize(st + 1, 0), tr.resize(st + 1, 0);
      ++tr[st];
      if (r.event) ++ev[st], ++lv.events;
      if (r.censored) ++lv.censored;
      ++lv.trials;
    }
    lv.estimate = lv.trials ? static_cast<double>(lv.events) / static_cast<double>(lv.trials) : 0.0;
    lv.upper = lv.trials ? clopper_pearson_upper(lv.events, lv.trials) : 1.0;
    for (std::size_t k = 0; k < ev.size(); ++k)
      if (tr[k]) lv.max_estimate = std::max(lv.max_estimate, static_cast<double>(ev[k]) / static_cast<double>(tr[k]));
    if (!std::isnan(lv.reference) && lv.upper > lv.reference) rep.bound_holds = false;
    rep.levels.push_back(lv);
  }
  const auto& a = rep.levels.front();
  const auto& b = rep.levels.back();
  rep.trend_pvalue = expect_increase ? proportion_increase_pvalue(a.events, a.trials, b.events, b.trials)
                                     : proportion_increase_pvalue(a.trials - a.events, a.trials,
                                                                  b.trials - b.events, b.trials);
  bool monotone = true;
  for (std::size_t l = 1; l < rep.levels.size(); ++l) {
    const double prev = rep.levels[l - 1].estimate, cur = rep.levels[l].estimate;
    if (expect_increase ? cur < prev : cur > prev) monotone = false;
  }
  rep.trend_holds = monotone && rep.trend_pvalue < 0.05;
  rep.trials = std::move(rows);
  rep.passed = rep.trend_holds && rep.bound_holds;
  return rep;
}

std::vector<double> nan_list(std::size_t k) { return std::vector<double>(k, std::numeric_limits<double>::quiet_NaN()); }

}  // namespace

void ProportionReport::write_csv(std::ostream& os) const {
  os << "N,start,replica,event,time,censored\n";
  os.precision(17);
  for (auto& r : trials)
    os << r.n << ',' << r.start << ',' << r.replica << ',' << (r.event ? 1 : 0) << ',' << r.time << ','
       << (r.censored ? 1 : 0) << '\n';
}

double homogenization_time(const SpectralData& s, double delta) {
  return -std::log(delta / (4.0 * s.mixing_prefactor())) / s.gap();
}

HittingReport hitting_time_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p) {
  plan.check(s.size());
  p.check(s.size());
  const Eigen::VectorXd& pi = s.stationary();
  const int d = s.size();
  ScalingPlan corner = plan;
  corner.start = StartRecipe::Corner;
  std::vector<std::vector<State>> starts;
  std::vector<double> deltas, t_n, s_n, bounds;
  for (long n : plan.ladder) {
    starts.push_back(initial_states(corner, pi, n));
    const double dn = plan.delta_at(n);
    deltas.push_back(dn);
    t_n.push_back(homogenization_time(s, dn));
    s_n.push_back(-std::log(dn / (2.0 * s.mixing_prefactor())) / s.gap());
    bounds.push_back(d / (dn * dn * static_cast<double>(plan.population(n))));
  }
  const auto tasks = make_tasks(corner, starts);
  std::vector<TrialRow> hat(tasks.size()), comp(tasks.size()), closed(tasks.size());
  NetworkEngine engine(s, p);
  const NetworkParams none{std::vector<double>(static_cast<std::size_t>(d), 0.0),
                           std::vector<double>(static_cast<std::size_t>(d), 0.0)};
  NetworkEngine closed_engine(s, none);

  parallel_for(tasks.size(), [&](std::size_t k) {
    const Task& task = tasks[k];
    const long n = plan.ladder[task.level];
    const double nd = static_cast<double>(n);
    const double dn = deltas[task.level], horizon = t_n[task.level];
    RngStream rng = task_rng(corner, task);
    State x = starts[task.level][task.start];
    double t_hat = -1, t_chi = -1;
    auto observe = [&](double t, const State& y) {
      if (t_hat < 0 && sup_norm_distance(scaled(y, nd), pi) <= dn) t_hat = t;
      if (t_chi < 0 && sup_norm_distance(composition(y), pi) <= dn) t_chi = t;
      return t_hat < 0 || t_chi < 0;
    };
    RunStatus st{};
    if (observe(0.0, x)) st = engine.run(x, horizon, rng, [&](const Event& e, const State& y) { return observe(e.time, y); });
    hat[k] = {n, task.start, task.replica, t_hat < 0, t_hat < 0 ? horizon : t_hat, st.truncated};
    comp[k] = {n, task.start, task.replica, t_chi < 0, t_chi < 0 ? horizon : t_chi, st.truncated};

    // Closed network of the same initial particles, observed at s_N.
    RngStream rc(derive_seed(plan.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(task.start),
                                         static_cast<std::uint64_t>(task.replica), 1}),
                 0);
    State u = starts[task.level][task.start];
    RunStatus sc = closed_engine.run(u, s_n[task.level], rc, [](const Event&, const State&) { return true; });
    const bool exceed = sup_norm_distance(scaled(u, nd), pi) > dn;
    closed[k] = {n, task.start, task.replica, exceed, s_n[task.level], sc.truncated};
  }, plan.workers);

  HittingReport rep;
  rep.unnormalized = tally("hitting-unnormalized", plan, std::move(hat), deltas, t_n, nan_list(deltas.size()), false);
  rep.composition = tally("hitting-composition", plan, std::move(comp), deltas, t_n, nan_list(deltas.size()), false);
  rep.closed = tally("closed-variance", plan, std::move(closed), deltas, s_n, bounds, false);
  rep.closed.passed = rep.closed.bound_holds;
  return rep;
}

ProportionReport entropy_survival(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p,
                                  double eps, double delta) {
  plan.check(s.size());
  p.check(s.size());
  if (!(delta >= 0) || !(delta < eps)) throw ScalingError(ScalingErrc::InvalidPlan, "need 0 <= delta < eps");
  const Eigen::VectorXd& pi = s.stationary();
  std::vector<std::vector<State>> starts;
  for (long n : plan.ladder) {
    const std::int64_t total = plan.population(n);
    Eigen::VectorXd target = delta > 0 ? composition_with_entropy(pi, delta) : pi;
    State x = rounded_state(target, total);
    // Rounding may push the entropy above delta; pull toward pi until it fits.
    for (int k = 0; k < 200 && delta > 0 && relative_entropy(composition(x), pi) > delta; ++k) {
      target = pi + 0.98 * (target - pi);
      x = rounded_state(target, total);
    }
    if (relative_entropy(composition(x), pi) > std::max(delta, 1e-300) && delta > 0)
      throw ScalingError(ScalingErrc::InvalidPlan, "no lattice start within the entropy budget");
    starts.push_back({x});
  }
  const auto tasks = make_tasks(plan, starts);
  std::vector<TrialRow> rows(tasks.size());
  NetworkEngine engine(s, p);

  parallel_for(tasks.size(), [&](std::size_t k) {
    const Task& task = tasks[k];
    const long n = plan.ladder[task.level];
    const double horizon = plan.horizon * static_cast<double>(n);
    RngStream rng = task_rng(plan, task);
    State x = starts[task.level][task.start];
    double exit = -1;
    RunStatus st{};
    if (relative_entropy(composition(x), pi) > eps)
      exit = 0;
    else
      st = engine.run(x, horizon, rng, [&](const Event& e, const State& y) {
        if (relative_entropy(composition(y), pi) > eps) {
          exit = e.time;
          return false;
        }
        return true;
      });
    rows[k] = {n, task.start, task.replica, exit < 0, exit < 0 ? horizon : exit, st.truncated};
  }, plan.workers);

  std::vector<double> deltas(plan.ladder.size(), delta), times;
  for (long n : plan.ladder) times.push_back(plan.horizon * static_cast<double>(n));
  return tally("entropy-survival", plan, std::move(rows), deltas, times, nan_list(deltas.size()), true);
}

ProportionReport trapping_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p, double eps,
                              double delta) {
  if (regime_of(p) != Regime::Supercritical)
    throw ScalingError(ScalingErrc::RegimeMismatch, "trapping needs lambda > mu");
  const double eps0 = entropy_constants(s.stationary()).eps0_entropy;
  if (!(delta > 0) || !(delta < eps) || !(eps < eps0))
    throw ScalingError(ScalingErrc::InvalidPlan, "trapping needs 0 < delta < eps < eps0 = " + std::to_string(eps0));
  ProportionReport rep = entropy_survival(plan, s, p, eps, delta);
  rep.label = "trapping";
  return rep;
}

ProportionReport subcritical_exit_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p,
                                      double eps) {
  if (regime_of(p) != Regime::Subcritical)
    throw ScalingError(ScalingErrc::RegimeMismatch, "subcritical exit needs lambda < mu");
  const double t_a = plan.scale / (p.total_capacity() - p.total_arrival());
  if (!(plan.horizon < t_a)) throw ScalingError(ScalingErrc::InvalidPlan, "need t < a / (mu - lambda)");
  ProportionReport rep = entropy_survival(plan, s, p, eps, 0.0);
  // Survival and exit are complementary.
  for (auto& r : rep.trials) r.event = !r.event;
  for (auto& lv : rep.levels) {
    lv.events = lv.trials - lv.events;
    lv.estimate = lv.trials ? static_cast<double>(lv.events) / static_cast<double>(lv.trials) : 0.0;
    lv.upper = lv.trials ? clopper_pearson_upper(lv.events, lv.trials) : 1.0;
    lv.max_estimate = lv.estimate;
  }
  const auto& a = rep.levels.front();
  const auto& b = rep.levels.back();
  rep.trend_pvalue = proportion_increase_pvalue(a.trials - a.events, a.trials, b.trials - b.events, b.trials);
  bool monotone = true;
  for (std::size_t l = 1; l < rep.levels.size(); ++l)
    if (rep.levels[l].estimate > rep.levels[l - 1].estimate) monotone = false;
  rep.trend_holds = monotone && rep.trend_pvalue < 0.05;
  rep.passed = rep.trend_holds;
  rep.label = "subcritical-exit";
  return rep;
}

// ---------------------------------------------------------------- drift

DriftPath drift_run(const SpectralData& s, const NetworkParams& p, const State& x0, double t_max, RngStream& rng) {
  if (regime_of(p) != Regime::Supercritical)
    throw ScalingError(ScalingErrc::RegimeMismatch, "drift needs lambda > mu");
  if (!(t_max > 0)) throw ScalingError(ScalingErrc::InvalidPlan, "t_max must be positive");
  DriftPath out;
  for (int k = 10; k >= 0; --k) out.times.push_back(std::ldexp(t_max, -k));
  auto ratio = [](const State& y, double t) {
    Eigen::VectorXd v(y.size());
    for (int i = 0; i < y.size(); ++i) v(i) = static_cast<double>(y[i]) / t;
    return v;
  };
  NetworkEngine engine(s, p);
  State x = x0, held = x0;
  std::size_t next = 0;
  RunStatus st = engine.run(x, t_max, rng, [&](const Event& e, const State& y) {
    while (next < out.times.size() && out.times[next] < e.time) out.ratios.push_back(ratio(held, out.times[next++]));
    held = y;
    return true;
  });
  while (next < out.times.size()) out.ratios.push_back(ratio(x, out.times[next++]));
  const Eigen::VectorXd limit = (p.total_arrival() - p.total_capacity()) * s.stationary();
  out.final_error = sup_norm_distance(out.ratios.back(), limit);
  out.truncated = st.truncated;
  return out;
}

DriftReport drift_ensemble(const SpectralData& s, const NetworkParams& p, const State& x0, double t_max, long paths,
                           std::uint64_t seed, double tolerance, int workers) {
  if (regime_of(p) != Regime::Supercritical)
    throw ScalingError(ScalingErrc::RegimeMismatch, "drift needs lambda > mu");
  DriftReport rep;
  rep.paths.resize(static_cast<std::size_t>(paths));
  parallel_for(rep.paths.size(), [&](std::size_t k) {
    RngStream rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}), 0);
    rep.paths[k] = drift_run(s, p, x0, t_max, rng);
  }, workers);
  rep.tolerance = tolerance;
  rep.limit = (p.total_arrival() - p.total_capacity()) * s.stationary();
  for (auto& d : rep.paths)
    if (d.final_error < tolerance) ++rep.within;
  rep.within_fraction = paths ? static_cast<double>(rep.within) / static_cast<double>(paths) : 0.0;
  return rep;
}

// ---------------------------------------------------------------- ergodicity

ErgodicityReport population_probe(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p) {
  plan.check(s.size());
  p.check(s.size());
  ScalingPlan corner = plan;
  corner.start = StartRecipe::Corner;
  std::vector<std::vector<State>> starts;
  for (long n : plan.ladder) starts.push_back(initial_states(corner, s.stationary(), n));
  const auto tasks = make_tasks(corner, starts);
  std::vector<TrialRow> rows(tasks.size());
  NetworkEngine engine(s, p);

  parallel_for(tasks.size(), [&](std::size_t k) {
    const Task& task = tasks[k];
    const long n = plan.ladder[task.level];
    RngStream rng = task_rng(corner, task);
    State x = starts[task.level][task.start];
    RunStatus st = engine.run(x, plan.horizon * static_cast<double>(n), rng,
                              [](const Event&, const State&) { return true; });
    rows[k] = {n, task.start, task.replica, false,
               static_cast<double>(x.total()) / static_cast<double>(n), st.truncated};
  }, plan.workers);

  ErgodicityReport rep;
  rep.horizon = plan.horizon;
  std::vector<std::vector<double>> pooled(plan.ladder.size());
  for (std::size_t l = 0; l < plan.ladder.size(); ++l) {
    MeanLevel lv{};
    lv.n = plan.ladder[l];
    for (std::size_t c = 0; c < starts[l].size(); ++c) {
      std::vector<double> v;
      for (auto& r : rows)
        if (r.n == lv.n && r.start == static_cast<int>(c)) v.push_back(r.time);
      pooled[l].insert(pooled[l].end(), v.begin(), v.end());
      const MeanSe ms = mean_se(v);
      lv.means.push_back(ms.mean);
      lv.errors.push_back(ms.se);
      if (c == 0 || ms.mean > lv.max_mean) {
        lv.max_mean = ms.mean;
        lv.max_error = ms.se;
      }
    }
    lv.raw_max = lv.max_mean * static_cast<double>(lv.n);
    rep.levels.push_back(lv);
  }
  rep.decreasing = true;
  for (std::size_t l = 1; l < rep.levels.size(); ++l)
    if (!(rep.levels[l].max_mean < rep.levels[l - 1].max_mean)) rep.decreasing = false;
  rep.trend_pvalue = median_split_pvalue(pooled.front(), pooled.back());
  rep.final_mean = rep.levels.back().max_mean;
  rep.trials = std::move(rows);
  rep.passed = rep.decreasing && rep.final_mean < plan.tolerance;
  return rep;
}

ErgodicityReport ergodicity_probe(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p) {
  if (regime_of(p) != Regime::Subcritical)
    throw ScalingError(ScalingErrc::RegimeMismatch, "ergodicity probe needs lambda < mu");
  return population_probe(plan, s, p);
}

}  // namespace mobnet
