#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mobnet/simulator.hpp"

namespace mobnet {

enum class StartRecipe { Proportional, Corner, Custom };
const char* to_string(StartRecipe r);

struct ScalingPlan {
  std::vector<long> ladder{100, 300, 1000};
  long replicas = 50;
  double horizon = 2.0;       // fluid time, or real time for Kelly runs
  double window_start = 0.1;  // fluid window [window_start, horizon]
  StartRecipe start = StartRecipe::Proportional;
  Eigen::VectorXd rho;        // composition for Proportional (pi when empty) and Custom
  double scale = 1.0;         // |x_N| = floor(scale * N)
  double delta = 0.1;         // fixed delta
  double delta_exponent = 0;  // > 0 selects delta_N = N^{-delta_exponent}
  double tolerance = 0.1;
  double pass_fraction = 0.95;
  std::uint64_t seed = 1;
  int workers = 0;

  // Throws ScalingError(InvalidPlan).
  void check(int n) const;
  double delta_at(long n) const;
  std::int64_t population(long n) const;
};

// Largest-remainder rounding of total * rho.
State rounded_state(const Eigen::VectorXd& rho, std::int64_t total);

// Initial states for scale N: one state, or one per node for corner starts.
std::vector<State> initial_states(const ScalingPlan& plan, const Eigen::VectorXd& pi, long n);

// Point on the segment from pi to e_1 with H(rho, pi) = h (h below H(e_1, pi)).
Eigen::VectorXd composition_with_entropy(const Eigen::VectorXd& pi, double h);

// ---------------------------------------------------------------- deviation reports

struct DeviationSample {
  long n;
  int start;  // index into initial_states
  long replica;
  double deviation;  // sup-norm deviation from the online pass
  double rescan;     // same statistic from replaying the stored path
  double at_time;    // where the sup is attained (fluid time for fluid runs)
  bool censored;     // event guard hit
};

struct DeviationLevel {
  long n;
  long samples;
  long censored;
  double q10, median, q90, max;
  long within;  // deviation <= tolerance
  double within_fraction;
};

struct DeviationReport {
  std::string label;
  double tolerance = 0;
  double pass_fraction = 0;
  double window_start = 0, window_end = 0;
  std::vector<DeviationSample> samples;
  std::vector<DeviationLevel> levels;
  bool rescan_agrees = true;
  bool median_decreasing = false;  // median at the largest N below the smallest
  double trend_pvalue = 1;         // one-sided Fisher test on the pooled-median split
  bool passed = false;             // rescan, tolerance at the largest N, median trend

  // fluid_time,deviation,N,replica,start,rescan,censored
  void write_csv(std::ostream& os) const;
};

// sup_{0<=t<=T} ||X(t)/N - rho P_t|| with T = plan.horizon in real time.
DeviationReport kelly_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p);

// Fluid trajectory (a + (lambda - mu) u)^+ pi; the critical case is constant.
Eigen::VectorXd fluid_path(const Eigen::VectorXd& pi, double a, double drift, double u);

// sup over [s, t] of ||X(N u)/N - x(u)||. Throws RegimeMismatch when the
// declared regime differs from regime_of(p).
DeviationReport fluid_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p, Regime regime);

// ---------------------------------------------------------------- proportions

struct TrialRow {
  long n;
  int start;
  long replica;
  bool event;   // the event whose probability is estimated
  double time;  // stopping time, or the horizon when not reached
  bool censored;
};

struct ProportionLevel {
  long n;
  long trials;
  long events;
  double estimate;      // pooled over starts
  double upper;         // Clopper-Pearson 95% upper end, pooled
  double max_estimate;  // max over starts
  double delta;
  double time;       // t_delta, t_N, s_N or the horizon, in real time
  double reference;  // bound where one applies, otherwise NaN
  long censored;
};

struct ProportionReport {
  std::string label;
  std::vector<ProportionLevel> levels;
  std::vector<TrialRow> trials;
  double trend_pvalue = 1;  // one-sided test for the expected direction, smallest vs largest N
  bool trend_holds = false;
  bool bound_holds = true;  // upper <= reference at every level with a reference
  bool passed = false;

  // N,start,replica,event,time,censored
  void write_csv(std::ostream& os) const;
};

struct HittingReport {
  ProportionReport unnormalized;  // P(T^_delta > t), ||X/N - pi|| <= delta
  ProportionReport composition;   // P(T_delta > t), ||chi - pi|| <= delta
  ProportionReport closed;        // P(||U(s_N)/N - pi|| > delta_N) against n / (delta_N^2 N)
};

// t_delta = -(1/eta) log(delta / (4B)).
double homogenization_time(const SpectralData& s, double delta);

// Corner starts with |x| = N. Uses delta_N and t_N = -(1/eta) log(delta_N/(4B))
// when plan.delta_exponent > 0, the fixed delta and t_delta otherwise. The
// closed-system check runs with lambda = mu = 0 at s_N = -(1/eta) log(delta_N/(2B)).
HittingReport hitting_time_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p);

// P(H(chi(t), pi) <= eps for all t <= N * plan.horizon) from a start with
// H(chi(x_N), pi) <= delta and |x_N| = floor(a N). No regime check.
ProportionReport entropy_survival(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p,
                                  double eps, double delta);

// entropy_survival for lambda > mu; trend is increasing in N.
ProportionReport trapping_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p,
                              double eps, double delta);

// P(T_H^eps <= N t) with t = plan.horizon < a / (mu - lambda); trend is decreasing.
ProportionReport subcritical_exit_run(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p,
                                      double eps);

// ---------------------------------------------------------------- drift

struct DriftPath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> ratios;  // X(t)/t at the checkpoints
  double final_error;                   // ||X(t_max)/t_max - (lambda - mu) pi||
  bool truncated;
};

// Checkpoints at t_max * 2^{-k}, k = 10..0.
DriftPath drift_run(const SpectralData& s, const NetworkParams& p, const State& x0, double t_max, RngStream& rng);

struct DriftReport {
  std::vector<DriftPath> paths;
  long within = 0;
  double within_fraction = 0;
  double tolerance = 0;
  Eigen::VectorXd limit;
};

DriftReport drift_ensemble(const SpectralData& s, const NetworkParams& p, const State& x0, double t_max,
                           long paths, std::uint64_t seed, double tolerance, int workers = 0);

// ---------------------------------------------------------------- ergodicity

struct MeanLevel {
  long n;
  std::vector<double> means;  // per corner, E[L(N T)/N]
  std::vector<double> errors;
  double max_mean;
  double max_error;
  double raw_max;  // max over corners of E[L(N T)]
};

struct ErgodicityReport {
  double horizon = 0;  // T
  std::vector<MeanLevel> levels;
  std::vector<TrialRow> trials;  // time field holds L(N T)/N
  double trend_pvalue = 1;       // more replicas below the pooled median at the largest N
  bool decreasing = false;
  double final_mean = 0;
  bool passed = false;
};

// Corner starts, T = plan.horizon (the default plan uses 1 / (mu - lambda)). No regime check.
ErgodicityReport population_probe(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p);

// population_probe for lambda < mu; passes when decreasing and below plan.tolerance at the largest N.
ErgodicityReport ergodicity_probe(const ScalingPlan& plan, const SpectralData& s, const NetworkParams& p);

}  // namespace mobnet
