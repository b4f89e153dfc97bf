#include "mobnet/experiments.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "mobnet/couplings.hpp"
#include "mobnet/martingale.hpp"
#include "mobnet/parallel.hpp"

#ifndef MOBNET_VERSION
#define MOBNET_VERSION "0.0.0"
#endif
#ifndef MOBNET_GIT
#define MOBNET_GIT "unknown"
#endif

namespace mobnet {

using nlohmann::json;

std::string code_version() { return std::string(MOBNET_VERSION) + "+" + MOBNET_GIT; }

bool SuiteReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

Eigen::MatrixXd random_rate_matrix(int n, std::mt19937_64& g, double density) {
  std::uniform_real_distribution<double> rate(0.2, 2.0), coin(0.0, 1.0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) q(i, (i + 1) % n) = rate(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && q(i, j) == 0 && coin(g) < density) q(i, j) = rate(g);
  for (int i = 0; i < n; ++i) q(i, i) = -q.row(i).sum();
  return q;
}

// ---------------------------------------------------------------- algebraic identities

SuiteReport algebraic_identities(const SpectralData& s, const NetworkParams& p, std::uint64_t seed, int samples) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = s.size();
  const MartingaleModel m(s, p);
  const SimplexChart chart(s);
  const Eigen::VectorXd& pi = s.stationary();
  const double theta = s.trace_rate();
  SuiteReport rep;
  auto add = [&](std::string name, double worst, double limit, std::string detail = {}) {
    rep.checks.push_back({std::move(name), worst <= limit, worst, limit, std::move(detail)});
  };
  auto random_vector = [&](int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = gauss(g);
    return v;
  };

  double worst = 0;
  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd v = random_vector(n);
    const double t = -3.0 + 6.0 * unit(g);
    const double want = std::exp(-theta * t) * m.psi(v);
    worst = std::max(worst, std::abs(m.psi(s.apply(t, v)) - want) / want);
  }
  add("psi(P_t v) = exp(-theta t) psi(v)", worst, 1e-10);

  worst = 0;
  double worst_inv = 0;
  for (int k = 0; k < samples; ++k) {
    const double t = 3.0 * unit(g);
    const double want = std::exp(theta * t) * pi.head(n - 1).prod();
    worst = std::max(worst, std::abs(chart.linear_part(t).determinant() - want) / want);
    // A point of S and its preimage under Psi_t.
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e(i) = -std::log(unit(g));
    const Eigen::VectorXd u = (e / e.sum()).head(n - 1);
    const Eigen::VectorXd pre = chart.inverse(t, u);
    // Psi_t expands by up to e^{eta t}, so the round trip is measured on the preimage side.
    const Eigen::VectorXd back = chart.inverse(t, chart.forward(t, pre));
    worst_inv = std::max(worst_inv, (back - pre).cwiseAbs().maxCoeff() / std::max(1.0, pre.cwiseAbs().maxCoeff()));
    // The formula J P_t (Delta^{-1} K u - 1) against inverting the affine map directly.
    const Eigen::VectorXd direct =
        chart.linear_part(t).lu().solve(u - chart.forward(t, Eigen::VectorXd::Zero(n - 1)));
    worst_inv = std::max(worst_inv, (pre - direct).cwiseAbs().maxCoeff() / std::max(1.0, direct.cwiseAbs().maxCoeff()));
  }
  add("Jacobian of Psi_t = exp(theta t) prod pi_i", worst, 1e-9);
  add("Psi_t inverse formula", worst_inv, 1e-10);

  worst = 0;
  const double lambda = p.total_arrival(), mu = p.total_capacity();
  std::uniform_int_distribution<int> count(0, 10);
  for (int k = 0; k < samples; ++k) {
    const double u = 2.0 * unit(g), t = 2.0 * unit(g);
    std::vector<std::int64_t> c(static_cast<std::size_t>(n));
    for (auto& ci : c) ci = count(g);
    const State x(c);
    const double h = m.harmonic_h(Eigen::VectorXd::Constant(n, u - 1.0), t, x);
    const double want =
        std::pow(u, static_cast<double>(x.total())) * std::exp((lambda * (1 - u) + mu * (1 - 1 / u)) * t);
    worst = std::max(worst, std::abs(h - want) / want);
  }
  add("h_v on constant v matches the M/M/1 martingale", worst, 1e-8);

  // Errors are scaled by |P_a| |P_b| (infinity norms), the rounding floor of the
  // product; for negative times the entries grow like e^{|theta| |t|}.
  auto norm = [](const Eigen::MatrixXd& a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); };
  worst = 0;
  double worst_inverse = 0;
  for (int k = 0; k < samples; ++k) {
    const double a = -3.0 + 6.0 * unit(g), b = -3.0 + 6.0 * unit(g);
    const Eigen::MatrixXd pa = s.semigroup(a), pb = s.semigroup(b);
    worst = std::max(worst, (pa * pb - s.semigroup(a + b)).cwiseAbs().maxCoeff() / (norm(pa) * norm(pb)));
    const double t = -5.0 + 10.0 * unit(g);
    const Eigen::MatrixXd pt = s.semigroup(t), pm = s.semigroup(-t);
    worst_inverse = std::max(
        worst_inverse, (pt * pm - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() / (norm(pt) * norm(pm)));
  }
  add("P_a P_b = P_{a+b} (relative to |P_a| |P_b|)", worst, 1e-9);
  add("P_t P_{-t} = I (relative to |P_t| |P_{-t}|)", worst_inverse, 1e-10);

  worst = 0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXcd w = s.eigenvectors().col(j);
    const Eigen::VectorXcd r = s.q().cast<std::complex<double>>() * w - s.eigenvalues()(j) * w;
    worst = std::max(worst, r.norm() / w.norm());
  }
  add("eigen-residual |Q w_j - theta_j w_j| / |w_j|", worst, 1e-10);
  add("sum theta_j = -theta", std::abs(s.eigenvalues().sum().real() + theta) / theta, 1e-12);
  add("pi Q = 0", (pi.transpose() * s.q()).cwiseAbs().maxCoeff(), 1e-12);

  worst = 0;
  for (int k = 0; k < samples; ++k) {
    Eigen::VectorXd v = random_vector(n);
    v.array() -= pi.dot(v);
    const double a = -1.5 + 3.0 * unit(g), b = -1.5 + 3.0 * unit(g);
    const Eigen::VectorXd once = m.flow(v, a + b);
    worst = std::max(worst, (m.flow(m.flow(v, a), b) - once).cwiseAbs().maxCoeff() / std::max(1.0, once.cwiseAbs().maxCoeff()));
  }
  add("phi(v, s + t) = phi(phi(v, t), s)", worst, 1e-9);

  worst = 0;
  for (int k = 0; k < samples; ++k) {
    const double t = 20.0 / s.gap() * unit(g);
    const Eigen::MatrixXd d = s.semigroup(t) - Eigen::VectorXd::Ones(n) * pi.transpose();
    worst = std::max(worst, d.cwiseAbs().maxCoeff() / (s.mixing_prefactor() * std::exp(-s.gap() * t)));
  }
  add("max |P_t - Pi| <= B exp(-eta t) at fresh times (ratio)", worst, 1.0);
  return rep;
}

// ---------------------------------------------------------------- pathwise couplings

SuiteReport pathwise_couplings(const SpectralData& s, const NetworkParams& p, long paths, double horizon,
                               std::uint64_t seed, int workers) {
  const int n = s.size();
  const auto np = static_cast<std::size_t>(paths);
  std::vector<char> triple_bad(np), sandwich_bad(np), pair_bad(np), closed_bad(np);
  std::vector<std::string> detail(np);
  parallel_for(np, [&](std::size_t k) {
    RngStream rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}), 0);
    std::vector<std::int64_t> cx(static_cast<std::size_t>(n)), cy(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      cx[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(rng.below(9));
      cy[static_cast<std::size_t>(i)] =
          static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cx[static_cast<std::size_t>(i)]) + 1));
    }
    const State x(cx), y(cy);

    TriplePath tp = simulate_triple(s, p, x, horizon, rng);
    tp.validate();
    CheckReport r = check_mm1_embedding(tp);
    if (!r.passed) triple_bad[k] = 1, detail[k] = r.detail;

    ClosedCoupling cc = simulate_closed_coupling(s, p, x, horizon, rng);
    r = check_sandwich(cc);
    if (!r.passed) sandwich_bad[k] = 1, detail[k] = r.detail;
    cc.closed.replay([&](double, const Event*, const State& u) {
      if (u.total() != x.total()) closed_bad[k] = 1;
    });

    CoupledPair cp = simulate_coupled_pair(s, p, x, y, horizon, rng);
    r = check_dominance(cp);
    if (!r.passed) pair_bad[k] = 1, detail[k] = r.detail;
  }, workers);

  auto count = [](const std::vector<char>& v) { return static_cast<double>(std::count(v.begin(), v.end(), 1)); };
  auto first = [&](const std::vector<char>& v) {
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k]) return "path " + std::to_string(k) + ": " + detail[k];
    return std::string();
  };
  SuiteReport rep;
  rep.checks.push_back({"triple decomposition, |Z| activation and M/M/1 embedding", count(triple_bad) == 0,
                        count(triple_bad), 0, first(triple_bad)});
  rep.checks.push_back({"closed-system sandwich U - N_mu <= X <= U + N_lambda", count(sandwich_bad) == 0,
                        count(sandwich_bad), 0, first(sandwich_bad)});
  rep.checks.push_back({"closed system conserves |U|", count(closed_bad) == 0, count(closed_bad), 0, {}});
  rep.checks.push_back({"monotone pair X^x >= X^y and L^x - L^y <= |x| - |y|", count(pair_bad) == 0,
                        count(pair_bad), 0, first(pair_bad)});
  return rep;
}

// ---------------------------------------------------------------- run

namespace {

json suite_json(const SuiteReport& r) {
  json a = json::array();
  for (const auto& c : r.checks)
    a.push_back({{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"limit", c.limit},
                 {"detail", c.detail}});
  return a;
}

json deviation_json(const DeviationReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"N", l.n}, {"samples", l.samples}, {"censored", l.censored}, {"q10", l.q10},
                      {"median", l.median}, {"q90", l.q90}, {"max", l.max}, {"within", l.within},
                      {"within_fraction", l.within_fraction}});
  return {{"label", r.label},
          {"tolerance", r.tolerance},
          {"pass_fraction", r.pass_fraction},
          {"window", {r.window_start, r.window_end}},
          {"levels", levels},
          {"rescan_agrees", r.rescan_agrees},
          {"median_decreasing", r.median_decreasing},
          {"trend_pvalue", r.trend_pvalue},
          {"passed", r.passed}};
}

json proportion_json(const ProportionReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels) {
    json e = {{"N", l.n},           {"trials", l.trials},   {"events", l.events},
              {"estimate", l.estimate}, {"upper", l.upper}, {"max_estimate", l.max_estimate},
              {"delta", l.delta},   {"time", l.time},       {"censored", l.censored}};
    if (!std::isnan(l.reference)) e["reference"] = l.reference;
    levels.push_back(e);
  }
  return {{"label", r.label},       {"levels", levels},         {"trend_pvalue", r.trend_pvalue},
          {"trend_holds", r.trend_holds}, {"bound_holds", r.bound_holds}, {"passed", r.passed}};
}

class Output {
 public:
  explicit Output(const ExperimentConfig& c, RunResult& r) : r_(r) {
    r_.directory = c.output;
    std::filesystem::create_directories(r_.directory);
  }
  // Names are plain file names, so nothing lands outside the output directory.
  std::ofstream open(const std::string& name) {
    std::ofstream os(r_.directory / name);
    if (!os) throw ConfigError(ConfigErrc::Io, "cannot write " + (r_.directory / name).string());
    r_.files.push_back(name);
    return os;
  }
  void json_file(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

 private:
  RunResult& r_;
};

}  // namespace

RunResult run_experiment(const ExperimentConfig& c) {
  const SpectralData s = spectral_of(c);
  const NetworkParams p = params_of(c);
  RunResult result;
  Output out(c, result);
  json summary = {{"kind", to_string(c.kind)}, {"seed", c.seed}};
  bool hard_ok = true, soft_ok = true;

  switch (c.kind) {
    case ExperimentKind::Simulate: {
      RngStream rng(derive_seed(c.seed, {0}), 0);
      Trajectory path = simulate(s, p, initial_of(c), c.t_max, rng);
      bool valid = true;
      std::string why;
      try {
        path.validate();
      } catch (const SimulationError& e) {
        valid = false;
        why = e.what();
      }
      auto os = out.open("trajectory.csv");
      path.write_csv(os);
      hard_ok = valid;
      summary["events"] = path.events().size();
      summary["final_state"] = path.final_state().counts();
      summary["truncated"] = path.truncated();
      summary["valid"] = valid;
      if (!valid) summary["violation"] = why;
      break;
    }
    case ExperimentKind::Kelly:
    case ExperimentKind::Fluid: {
      DeviationReport r = c.kind == ExperimentKind::Kelly ? kelly_run(c.plan, s, p) : fluid_run(c.plan, s, p, *c.regime);
      auto os = out.open("replicas.csv");
      r.write_csv(os);
      summary["report"] = deviation_json(r);
      hard_ok = r.rescan_agrees;
      soft_ok = r.passed;
      break;
    }
    case ExperimentKind::Hitting: {
      HittingReport r = hitting_time_run(c.plan, s, p);
      auto a = out.open("hitting_unnormalized.csv");
      r.unnormalized.write_csv(a);
      auto b = out.open("hitting_composition.csv");
      r.composition.write_csv(b);
      auto d = out.open("closed_variance.csv");
      r.closed.write_csv(d);
      summary["unnormalized"] = proportion_json(r.unnormalized);
      summary["composition"] = proportion_json(r.composition);
      summary["closed"] = proportion_json(r.closed);
      soft_ok = r.unnormalized.passed && r.closed.passed;
      break;
    }
    case ExperimentKind::Trapping:
    case ExperimentKind::SubcriticalExit: {
      ProportionReport r = c.kind == ExperimentKind::Trapping ? trapping_run(c.plan, s, p, c.eps, c.delta)
                                                              : subcritical_exit_run(c.plan, s, p, c.eps);
      auto os = out.open("replicas.csv");
      r.write_csv(os);
      summary["report"] = proportion_json(r);
      soft_ok = r.passed;
      break;
    }
    case ExperimentKind::Ergodicity: {
      ErgodicityReport r = ergodicity_probe(c.plan, s, p);
      auto os = out.open("replicas.csv");
      os << "N,start,replica,population_fraction,censored\n" << std::setprecision(17);
      for (const auto& t : r.trials)
        os << t.n << ',' << t.start << ',' << t.replica << ',' << t.time << ',' << (t.censored ? 1 : 0) << '\n';
      json levels = json::array();
      for (const auto& l : r.levels)
        levels.push_back({{"N", l.n}, {"means", l.means}, {"errors", l.errors}, {"max_mean", l.max_mean},
                          {"max_error", l.max_error}, {"raw_max", l.raw_max}});
      summary["report"] = {{"T", r.horizon},          {"levels", levels},     {"decreasing", r.decreasing},
                           {"trend_pvalue", r.trend_pvalue}, {"final_mean", r.final_mean}, {"passed", r.passed}};
      soft_ok = r.passed;
      break;
    }
    case ExperimentKind::Drift: {
      DriftReport r = drift_ensemble(s, p, initial_of(c), c.t_max, c.paths, c.seed, c.plan.tolerance, c.workers);
      auto os = out.open("checkpoints.csv");
      os << "path,time";
      for (int i = 0; i < s.size(); ++i) os << ",ratio_" << i + 1;
      os << '\n' << std::setprecision(17);
      for (std::size_t k = 0; k < r.paths.size(); ++k)
        for (std::size_t j = 0; j < r.paths[k].times.size(); ++j) {
          os << k << ',' << r.paths[k].times[j];
          for (int i = 0; i < s.size(); ++i) os << ',' << r.paths[k].ratios[j](i);
          os << '\n';
        }
      summary["report"] = {{"limit", std::vector<double>(r.limit.data(), r.limit.data() + r.limit.size())},
                           {"tolerance", r.tolerance},
                           {"within", r.within},
                           {"within_fraction", r.within_fraction},
                           {"passed", r.within_fraction >= c.plan.pass_fraction}};
      soft_ok = r.within_fraction >= c.plan.pass_fraction;
      break;
    }
    case ExperimentKind::MartingaleCheck: {
      const MartingaleModel m(s, p);
      auto os = out.open("constancy.csv");
      os << "alpha,t,mean,std_error,quad_error\n" << std::setprecision(17);
      json reports = json::array();
      for (double a : c.alphas) {
        ConstancyReport r = martingale_constancy_check(m, initial_of(c), a, c.times, c.paths, derive_seed(c.seed, {1}));
        json rows = json::array();
        for (const auto& row : r.rows) {
          os << a << ',' << row.t << ',' << row.mean << ',' << row.std_error << ',' << row.quad_error << '\n';
          rows.push_back({{"t", row.t}, {"mean", row.mean}, {"std_error", row.std_error}, {"quad_error", row.quad_error}});
        }
        reports.push_back({{"alpha", a},       {"paths", r.paths},   {"stopped", r.stopped}, {"level", r.level},
                           {"monte_carlo", r.monte_carlo}, {"rows", rows}, {"max_z", r.max_z}, {"passed", r.passed}});
        soft_ok = soft_ok && r.passed;
      }
      summary["reports"] = reports;
      break;
    }
    case ExperimentKind::DeviationBound: {
      const MartingaleModel m(s, p);
      DeviationBoundReport r =
          deviation_bound_check(m, initial_of(c), c.eps, c.delta, c.alphas, c.ells, c.paths, c.t_max, c.seed);
      auto os = out.open("bound.csv");
      os << "alpha,ell,estimate,std_error,upper,bound,passed\n" << std::setprecision(17);
      for (const auto& row : r.rows)
        os << row.alpha << ',' << row.ell << ',' << row.estimate << ',' << row.std_error << ',' << row.upper << ','
           << row.bound << ',' << (row.passed ? 1 : 0) << '\n';
      const auto& k = r.constants;
      summary["constants"] = {{"sup_G", k.sup_g},   {"sup_alpha_integral", k.sup_alpha_integral},
                              {"C3", k.c3},         {"sup_F", k.sup_f},
                              {"beta", k.beta},     {"inf_Phi_delta", k.inf_phi_delta},
                              {"B_delta", k.b_delta}, {"C_delta", k.c_delta}};
      summary["paths"] = r.paths;
      summary["exits"] = r.exits;
      summary["censored"] = r.censored;
      summary["passed"] = r.passed;
      soft_ok = r.passed;
      break;
    }
    case ExperimentKind::IdentitySuite: {
      SuiteReport a = algebraic_identities(s, p, c.seed);
      SuiteReport b = pathwise_couplings(s, p, c.paths, c.t_max, c.seed, c.workers);
      summary["algebraic"] = suite_json(a);
      summary["pathwise"] = suite_json(b);
      hard_ok = a.passed() && b.passed();
      break;
    }
  }

  result.hard_failure = !hard_ok;
  result.soft_failure = !soft_ok;
  summary["hard_failure"] = result.hard_failure;
  summary["soft_failure"] = result.soft_failure;
  out.json_file("summary.json", summary);
  json manifest = {{"config", json::parse(to_json_text(c))},
                   {"code_version", code_version()},
                   {"seed", c.seed},
                   {"files", result.files}};
  out.json_file("manifest.json", manifest);
  return result;
}

ExperimentConfig config_from_manifest(const std::string& manifest_text) {
  json m;
  try {
    m = json::parse(manifest_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigErrc::ConfigInvalid, std::string("manifest: ") + e.what());
  }
  if (!m.contains("config")) throw ConfigError(ConfigErrc::ConfigInvalid, "manifest: no config echo");
  return parse_config(m.at("config").dump());
}

// ---------------------------------------------------------------- describe

std::string describe(const ExperimentConfig& c) {
  const SpectralData s = spectral_of(c);
  const NetworkParams p = params_of(c);
  const EntropyConstants ec = entropy_constants(s.stationary());
  std::ostringstream os;
  os << std::setprecision(6);
  auto vec = [&](const Eigen::VectorXd& v) {
    os << '(';
    for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << ')';
  };
  os << "experiment  " << to_string(c.kind) << "\n";
  os << "nodes       " << s.size() << "\n";
  os << "pi          ";
  vec(s.stationary());
  os << "\ntheta       " << s.trace_rate() << "   (trace of -Q)\n";
  os << "eta         " << s.gap() << "   (spectral gap)\n";
  os << "B           " << s.mixing_prefactor() << "   (grid-certified, 10% margin)\n";
  os << "lambda, mu  " << p.total_arrival() << ", " << p.total_capacity() << "   (" << to_string(regime_of(p)) << ")\n";
  os << "C1, C2      " << ec.c1 << ", " << ec.c2 << "\n";
  os << "eps0        " << ec.eps0_norm << " (norm), " << ec.eps0_entropy << " (entropy)\n";
  if (regime_of(p) == Regime::Subcritical)
    os << "t_a         " << c.plan.scale / (p.total_capacity() - p.total_arrival()) << "   (a / (mu - lambda), a = "
       << c.plan.scale << ")\n";
  os << "t_delta     " << homogenization_time(s, c.plan.delta) << "   (delta = " << c.plan.delta << ", A = 4B)\n";
  const double expo = c.plan.delta_exponent > 0 ? c.plan.delta_exponent : 0.25;
  os << "\nschedule delta_N = N^-" << expo << "\n";
  os << std::setw(10) << "N" << std::setw(14) << "delta_N" << std::setw(14) << "s_N" << std::setw(14) << "t_N" << "\n";
  for (long n : c.plan.ladder) {
    const double d = std::pow(static_cast<double>(n), -expo);
    os << std::setw(10) << n << std::setw(14) << d << std::setw(14)
       << -std::log(d / (2 * s.mixing_prefactor())) / s.gap() << std::setw(14) << homogenization_time(s, d) << "\n";
  }
  return os.str();
}

}  // namespace mobnet
