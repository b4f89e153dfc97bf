#include "mobnet/martingale.hpp"

#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kronrod.hpp"
#include "mobnet/parallel.hpp"
#include "mobnet/simulator.hpp"
#include "mobnet/stats.hpp"

namespace mobnet {

namespace {

double log_sum_exp(const std::vector<double>& a) {
  if (a.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(a.begin(), a.end());
  if (!std::isfinite(m)) return m;
  // Neumaier summation keeps the result independent of node count drift.
  double s = 0, c = 0;
  for (double v : a) {
    const double y = std::exp(v - m);
    const double t = s + y;
    c += std::abs(s) >= y ? (s - t) + y : (y - t) + s;
    s = t;
  }
  return m + std::log(s + c);
}

}  // namespace

// ---------------------------------------------------------------- J_alpha

JAlpha::JAlpha(const MartingaleModel& model, double alpha, JAlphaOptions opt)
    : model_(std::make_shared<const MartingaleModel>(model)),
      alpha_(alpha),
      opt_(opt),
      rule_(model.spectral(), alpha) {}

const JAlpha::Level& JAlpha::level(int k) const {
  std::lock_guard<std::mutex> lock(*levels_mutex_);
  while (static_cast<int>(levels_.size()) <= k) {
    const int idx = static_cast<int>(levels_.size());
    const bool mc = model_->size() > opt_.tensor_max_n;
    QuadratureNodes nodes = mc ? rule_.monte_carlo(opt_.mc_samples << idx, opt_.mc_seed + static_cast<std::uint64_t>(idx))
                               : rule_.tensor(opt_.panels, kLevelPoints[std::min(idx, 4)]);
    auto lv = std::make_unique<Level>();
    lv->monte_carlo = mc;
    lv->samples = nodes.samples;
    const Eigen::VectorXd& pi = model_->spectral().stationary();
    // G vanishes like a positive power of u_i at the facets; nodes this
    // close contribute nothing and would leave the potential's domain.
    std::vector<double> log_g(nodes.points.size(), 0.0);
    std::vector<char> keep(nodes.points.size(), 0);
    parallel_for(nodes.points.size(), [&](std::size_t i) {
      const Eigen::VectorXd& u = nodes.points[i];
      if (u.cwiseQuotient(pi).minCoeff() <= 1e-13) return;
      log_g[i] = model_->log_G(u);
      keep[i] = 1;
    });
    for (std::size_t i = 0; i < nodes.points.size(); ++i) {
      if (!keep[i]) continue;
      const Eigen::VectorXd& u = nodes.points[i];
      lv->log_ratio.push_back((u.cwiseQuotient(pi)).array().log().matrix());
      lv->log_weight.push_back(std::log(nodes.weights[i]) + log_g[i]);
      lv->points.push_back(u);
    }
    levels_.push_back(std::move(lv));
  }
  return *levels_[static_cast<std::size_t>(k)];
}

std::size_t JAlpha::nodes_at_level(int k) const { return level(k).points.size(); }

double JAlpha::sum_level(const Level& lv, const State& x, double* std_error) const {
  const int n = model_->size();
  std::vector<double> terms(lv.log_ratio.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    double a = lv.log_weight[k];
    for (int i = 0; i < n; ++i)
      if (x[i] != 0) a += static_cast<double>(x[i]) * lv.log_ratio[k](i);
    terms[k] = a;
  }
  const double log_value = log_sum_exp(terms);
  const double value = std::exp(log_value);
  if (std_error) {
    *std_error = 0;
    if (lv.monte_carlo && lv.samples > 1) {
      const auto m = static_cast<double>(lv.samples);
      std::vector<double> sq(terms.size());
      for (std::size_t k = 0; k < terms.size(); ++k) sq[k] = 2.0 * terms[k];
      const double second = m * std::exp(log_sum_exp(sq));
      *std_error = std::sqrt(std::max(0.0, second - value * value) / (m - 1.0));
    }
  }
  return value;
}

double JAlpha::at_level(const State& x, double t, int k) const {
  return std::exp(-alpha_ * model_->spectral().trace_rate() * t) * sum_level(level(k), x, nullptr);
}

double JAlpha::entropy_form_at_level(const State& x, double t, int k) const {
  const Level& lv = level(k);
  const Eigen::VectorXd& pi = model_->spectral().stationary();
  const double l = static_cast<double>(x.total());
  Eigen::VectorXd chi = composition(x);
  const double h_pi = x.total() > 0 ? relative_entropy(chi, pi) : 0.0;
  std::vector<double> terms(lv.points.size());
  for (std::size_t k2 = 0; k2 < terms.size(); ++k2) {
    double e = 0;
    if (x.total() > 0) e = l * (h_pi - relative_entropy(chi, lv.points[k2]));
    terms[k2] = lv.log_weight[k2] + e;
  }
  return std::exp(-alpha_ * model_->spectral().trace_rate() * t + log_sum_exp(terms));
}

JValue JAlpha::operator()(const State& x, double t) const {
  const double decay = std::exp(-alpha_ * model_->spectral().trace_rate() * t);
  double prev = 0;
  for (int k = 0; k < opt_.max_levels; ++k) {
    double se = 0;
    const Level& lv = level(k);
    const double cur = sum_level(lv, x, &se);
    if (lv.monte_carlo) {
      if (se <= opt_.mc_rel_tol * std::abs(cur)) return {decay * cur, decay * se, true, k};
    } else if (k > 0 && std::abs(cur - prev) <= opt_.rel_tol * std::abs(cur)) {
      return {decay * cur, decay * std::abs(cur - prev), false, k};
    }
    prev = cur;
  }
  throw MartingaleError(MartingaleErrc::QuadratureDivergence, "J_alpha refinement did not converge");
}

// ---------------------------------------------------------------- integrability

std::vector<IntegrabilityRow> integrability_bound(const SpectralData& s, const std::vector<double>& alphas,
                                                  int panels, std::size_t mc_samples) {
  std::vector<IntegrabilityRow> rows;
  const int n = s.size();
  for (double a : alphas) {
    SingularSimplexRule rule(s, a);
    auto total = [](const QuadratureNodes& q) {
      double sum = 0;
      for (double w : q.weights) sum += w;
      return sum;
    };
    double coarse = 0, fine = 0;
    if (n <= 4) {
      coarse = total(rule.tensor(panels, 8));
      fine = total(rule.tensor(panels, 12));
    } else {
      coarse = total(rule.monte_carlo(mc_samples, 11));
      fine = total(rule.monte_carlo(2 * mc_samples, 12));
    }
    const double scale = std::pow(a, n);
    rows.push_back({a, scale * coarse, scale * fine, std::abs(fine - coarse) / std::abs(fine)});
  }
  return rows;
}

// ---------------------------------------------------------------- deviation bound

namespace {

// int over {u : H(v, u~) <= delta} of G, two-node networks.
double phi_delta_two(const MartingaleModel& model, const Eigen::VectorXd& v, double delta) {
  auto h = [&](double u) {
    Eigen::VectorXd ut(2);
    ut << u, 1.0 - u;
    return relative_entropy(v, ut) - delta;
  };
  const double c = v(0);
  boost::math::tools::eps_tolerance<double> tol(50);
  double a = 0, b = 1;
  if (c > 0) {
    const double lo = 1e-300;
    if (h(lo) > 0) {
      auto r = boost::math::tools::bisect(h, lo, c, tol);
      a = 0.5 * (r.first + r.second);
    }
  }
  if (c < 1) {
    double hi = 1.0 - 1e-16;
    if (h(hi) > 0) {
      auto r = boost::math::tools::bisect(h, c, hi, tol);
      b = 0.5 * (r.first + r.second);
    }
  }
  auto g = [&](double u) {
    Eigen::VectorXd ut(2);
    ut << u, 1.0 - u;
    return model.G(ut);
  };
  double err = 0;
  return detail::kronrod(g, a, b, 1e-10, 12, &err);
}

}  // namespace

DeviationConstants deviation_constants(const MartingaleModel& model, double delta, double grid_step) {
  const SpectralData& s = model.spectral();
  const int n = s.size();
  DeviationConstants c{};
  c.grid_step = grid_step;
  const int k = static_cast<int>(std::lround(1.0 / grid_step));

  std::vector<Eigen::VectorXd> interior;
  std::vector<double> g_interior;
  double sup_g = 0, sup_f = 0;
  for_each_lattice_point(n, k, [&](const Eigen::VectorXd& rho) {
    sup_f = std::max(sup_f, model.F(rho));
    if ((rho.array() > 0).all()) {
      double g = model.G(rho);
      sup_g = std::max(sup_g, g);
      interior.push_back(rho);
      g_interior.push_back(g);
    }
  });
  c.sup_g = 1.1 * sup_g;
  c.sup_f = 1.1 * sup_f;
  c.beta = std::min(1.0 / c.sup_f, 1.0);

  std::vector<double> alphas;
  for (int j = 1; j <= 20; ++j) alphas.push_back(0.05 * j);
  double sup_int = 0;
  for (const auto& row : integrability_bound(s, alphas)) sup_int = std::max(sup_int, row.fine);
  c.sup_alpha_integral = 1.1 * sup_int;
  c.c3 = c.sup_g * c.sup_alpha_integral;

  double inf_phi = std::numeric_limits<double>::infinity();
  const double cell = std::pow(1.0 / k, n - 1);
  for_each_lattice_point(n, k, [&](const Eigen::VectorXd& v) {
    double phi = 0;
    if (n == 2) {
      phi = phi_delta_two(model, v, delta);
    } else {
      for (std::size_t j = 0; j < interior.size(); ++j)
        if (relative_entropy(v, interior[j]) <= delta) phi += g_interior[j] * cell;
    }
    inf_phi = std::min(inf_phi, phi);
  });
  c.inf_phi_delta = inf_phi / 1.1;
  c.b_delta = c.beta * c.inf_phi_delta;
  c.c_delta = c.c3 / c.b_delta;
  return c;
}

DeviationBoundReport deviation_bound_check(const MartingaleModel& model, const State& x0, double eps, double delta,
                                      const std::vector<double>& alphas, const std::vector<double>& ells,
                                      long paths, double horizon, std::uint64_t seed, double grid_step) {
  const SpectralData& s = model.spectral();
  const Eigen::VectorXd& pi = s.stationary();
  const EntropyConstants ec = entropy_constants(pi);
  if (!(eps < ec.eps0_entropy) || !(delta < eps) || !(delta > 0))
    throw MartingaleError(MartingaleErrc::InvalidArgument, "need 0 < delta < eps < eps0");
  const double h0 = x0.total() > 0 ? relative_entropy(composition(x0), pi) : 0.0;
  if (!(h0 <= eps))
    throw MartingaleError(MartingaleErrc::InvalidArgument, "initial entropy already above eps");

  DeviationBoundReport rep;
  rep.constants = deviation_constants(model, delta, grid_step);
  rep.paths = paths;
  NetworkEngine engine(s, model.params());
  std::vector<double> exit_time(static_cast<std::size_t>(paths), horizon);
  std::vector<std::int64_t> exit_pop(static_cast<std::size_t>(paths), 0);
  std::vector<bool> hit(static_cast<std::size_t>(paths), false);
  for (long k = 0; k < paths; ++k) {
    RngStream rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}), 0);
    State x = x0;
    const auto uk = static_cast<std::size_t>(k);
    engine.run(x, horizon, rng, [&](const Event& e, const State& y) {
      if (relative_entropy(composition(y), pi) > eps) {
        hit[uk] = true;
        exit_time[uk] = e.time;
        exit_pop[uk] = y.total();
        return false;
      }
      return true;
    });
    if (hit[uk]) ++rep.exits;
    else {
      ++rep.censored;
      exit_pop[uk] = x.total();
    }
  }

  const double theta = s.trace_rate();
  const int n = s.size();
  for (double a : alphas) {
    for (double ell : ells) {
      double sum = 0, sq = 0;
      for (long k = 0; k < paths; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        // Censored paths contribute e^{-alpha theta horizon}, an upper bound.
        double y = static_cast<double>(exit_pop[uk]) >= ell || !hit[uk] ? std::exp(-a * theta * exit_time[uk]) : 0.0;
        sum += y;
        sq += y * y;
      }
      const double m = static_cast<double>(paths);
      const double mean = sum / m;
      const double se = std::sqrt(std::max(0.0, sq / m - mean * mean) / (m - 1.0));
      DeviationRow row{a, ell, mean, se, mean + 1.96 * se, 0, false};
      row.bound = rep.constants.c_delta * std::pow(a, -n) *
                  std::exp(static_cast<double>(x0.total()) * h0 - (eps - delta) * ell);
      row.passed = row.upper <= row.bound;
      rep.passed = rep.passed && row.passed;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

// ---------------------------------------------------------------- constancy

ConstancyReport martingale_constancy_check(const MartingaleModel& model, const State& x0, double alpha,
                                           const std::vector<double>& times, long paths, std::uint64_t seed,
                                           double z, int level) {
  if (times.empty() || paths < 2 || level < 1)
    throw MartingaleError(MartingaleErrc::InvalidArgument, "need times, at least two paths and level >= 1");
  const double t_max = *std::max_element(times.begin(), times.end());
  const auto nt = times.size();
  const auto np = static_cast<std::size_t>(paths);

  // Stopped states and times per (path, t).
  std::vector<State> at(np * nt);
  std::vector<double> when(np * nt);
  std::vector<char> stopped(np, 0);
  NetworkEngine engine(model.spectral(), model.params());
  parallel_for(np, [&](std::size_t k) {
    RngStream rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}), 0);
    State x = x0;
    std::vector<char> done(nt, 0);
    double last = 0;
    auto record_until = [&](double t_end, const State& y) {
      for (std::size_t j = 0; j < nt; ++j)
        if (!done[j] && times[j] < t_end) {
          at[k * nt + j] = y;
          when[k * nt + j] = times[j];
          done[j] = 1;
        }
    };
    bool empty = x.any_empty();
    if (!empty) {
      State before = x;
      engine.run(x, t_max, rng, [&](const Event& e, const State& y) {
        record_until(e.time, before);
        last = e.time;
        before = y;
        if (y.any_empty()) {
          empty = true;
          return false;
        }
        return true;
      });
      if (!empty) record_until(std::numeric_limits<double>::infinity(), x);
    }
    if (empty) {
      stopped[k] = 1;
      for (std::size_t j = 0; j < nt; ++j)
        if (!done[j]) {
          at[k * nt + j] = x;
          when[k * nt + j] = last;
          done[j] = 1;
        }
    }
  });

  JAlpha j(model, alpha);
  ConstancyReport rep;
  rep.alpha = alpha;
  rep.paths = paths;
  rep.level = level;
  rep.monte_carlo = model.size() > JAlphaOptions{}.tensor_max_n;
  for (char c : stopped) rep.stopped += c;
  j.at_level(x0, 0.0, level);  // build the node sets before fanning out
  for (std::size_t jt = 0; jt < nt; ++jt) {
    std::vector<double> fine(np), diff(np);
    parallel_for(np, [&](std::size_t k) {
      const State& y = at[k * nt + jt];
      const double tk = when[k * nt + jt];
      fine[k] = j.at_level(y, tk, level);
      diff[k] = std::abs(fine[k] - j.at_level(y, tk, level - 1));
    });
    const MeanSe ms = mean_se(fine);
    rep.rows.push_back({times[jt], ms.mean, ms.se, mean_se(diff).mean});
  }
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t b = a + 1; b < nt; ++b) {
      const auto& ra = rep.rows[a];
      const auto& rb = rep.rows[b];
      const double se = std::sqrt(ra.std_error * ra.std_error + rb.std_error * rb.std_error);
      const double zz = se > 0 ? std::abs(ra.mean - rb.mean) / se : 0.0;
      rep.max_z = std::max(rep.max_z, zz);
    }
  rep.passed = rep.max_z <= z;
  return rep;
}

// ---------------------------------------------------------------- direct g, n = 2

DirectHarmonic2::DirectHarmonic2(const MartingaleModel& model, double alpha, int refinement)
    : model_(&model), alpha_(alpha), refinement_(refinement) {
  if (model.size() != 2)
    throw MartingaleError(MartingaleErrc::InvalidArgument, "direct harmonic integral is for n = 2");
  if (!(alpha > 0)) throw MartingaleError(MartingaleErrc::InvalidArgument, "alpha must be positive");
}

double DirectHarmonic2::Slice::operator()(const State& x) const {
  std::vector<double> terms(log_weight.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    double a = log_weight[k];
    for (int i = 0; i < 2; ++i)
      if (x[i] != 0) a += static_cast<double>(x[i]) * std::log1p(phi[k](i));
    terms[k] = a;
  }
  return std::exp(log_sum_exp(terms));
}

DirectHarmonic2::Slice DirectHarmonic2::at(double t) const {
  const SimplexChart chart(model_->spectral());
  Eigen::VectorXd one(1);
  one << 1.0;
  const Eigen::VectorXd dir = model_->flow(chart.hat(one), t);
  double a = -std::numeric_limits<double>::infinity(), b = -a;
  for (int i = 0; i < 2; ++i) {
    if (dir(i) > 0) a = std::max(a, -1.0 / dir(i));
    if (dir(i) < 0) b = std::min(b, -1.0 / dir(i));
  }
  // tanh-sinh on (0, 1): s = (1 + tanh(pi/2 sinh k h)) / 2.
  const double h = std::ldexp(1.0, -refinement_);
  std::vector<double> sx, sw;
  for (int k = -static_cast<int>(std::ceil(4.0 / h)); k * h <= 4.0; ++k) {
    const double arg = 0.5 * std::numbers::pi * std::sinh(k * h);
    const double c = std::cosh(arg);
    const double wk = 0.25 * h * std::numbers::pi * std::cosh(k * h) / (c * c);
    const double x = 0.5 * (1.0 + std::tanh(arg));
    if (wk < 1e-30 || !(x > 0.0 && x < 1.0)) continue;
    sx.push_back(x);
    sw.push_back(wk);
  }
  Slice sl;
  for (int side : {-1, 1}) {
    const double end = side > 0 ? b : -a;
    const double t1 = std::pow(end, alpha_);
    for (std::size_t q = 0; q < sx.size(); ++q) {
      const double tau = t1 * sx[q];
      Eigen::VectorXd u(1);
      u << side * std::pow(tau, 1.0 / alpha_);
      const double du = std::pow(tau, 1.0 / alpha_ - 1.0) / alpha_;
      const Eigen::VectorXd v = chart.hat(u);
      const double f = model_->psi(v);
      Eigen::VectorXd phi = model_->flow(v, t);
      if ((phi.array() + 1.0 <= 1e-12).any()) continue;
      const double lw = std::log(t1 * sw[q] * du) + (alpha_ - 1.0) * std::log(f) + model_->potential0(phi).value;
      if (!std::isfinite(lw)) continue;
      sl.log_weight.push_back(lw);
      sl.phi.push_back(phi);
    }
  }
  return sl;
}

}  // namespace mobnet
