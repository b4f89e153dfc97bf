#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "mobnet/flow.hpp"
#include "mobnet/simplex_quadrature.hpp"

namespace mobnet {

struct JAlphaOptions {
  int panels = 2;      // per smooth piece; level k uses kLevelPoints[k] nodes per panel
  int max_levels = 5;
  double rel_tol = 1e-8;
  int tensor_max_n = 4;  // above this the simplex integral is sampled
  std::size_t mc_samples = 20000;
  double mc_rel_tol = 0.02;
  std::uint64_t mc_seed = 0x5eedULL;
};

struct JValue {
  double value;
  double error;  // refinement difference, or standard error when sampled
  bool monte_carlo;
  int level;
};

// J_alpha(t, x) = e^{-alpha theta t} int_S prod (u_i / pi_i)^{x_i} G(u) F(u)^{alpha-1} du.
// Nodes and G values are computed once per refinement level and reused for all (t, x).
class JAlpha {
 public:
  static constexpr int kLevelPoints[5] = {8, 12, 16, 20, 30};

  JAlpha(const MartingaleModel& model, double alpha, JAlphaOptions opt = {});

  double alpha() const { return alpha_; }
  JValue operator()(const State& x, double t) const;

  // Value at a fixed refinement level, in the product form and in the
  // relative-entropy form e^{L (H(chi, pi) - H(chi, u))}.
  double at_level(const State& x, double t, int level) const;
  double entropy_form_at_level(const State& x, double t, int level) const;
  std::size_t nodes_at_level(int level) const;

 private:
  struct Level {
    std::vector<Eigen::VectorXd> points;
    std::vector<Eigen::VectorXd> log_ratio;  // log(u_i / pi_i)
    std::vector<double> log_weight;          // log(weight * G)
    std::size_t samples = 0;
    bool monte_carlo = false;
  };
  const Level& level(int k) const;
  double sum_level(const Level& lv, const State& x, double* std_error) const;

  std::shared_ptr<const MartingaleModel> model_;
  double alpha_;
  JAlphaOptions opt_;
  SingularSimplexRule rule_;
  mutable std::vector<std::unique_ptr<Level>> levels_;
  std::unique_ptr<std::mutex> levels_mutex_ = std::make_unique<std::mutex>();
};

struct IntegrabilityRow {
  double alpha;
  double coarse;  // alpha^n int_S F^{alpha-1}
  double fine;    // same at twice the resolution
  double relative_change;
};

// alpha^n int_S F^{alpha-1} du for each alpha, at two resolutions.
// Tensor rule with 8 and 12 points per panel for n <= 4, Monte Carlo above.
std::vector<IntegrabilityRow> integrability_bound(const SpectralData& s, const std::vector<double>& alphas,
                                                  int panels = 2, std::size_t mc_samples = 200000);

struct DeviationConstants {
  double sup_g;
  double sup_alpha_integral;  // sup_{alpha <= 1} alpha^n int F^{alpha-1}
  double c3;
  double sup_f;
  double beta;
  double inf_phi_delta;  // inf_P int_{S_delta(v)} G
  double b_delta;
  double c_delta;
  double grid_step;
};

DeviationConstants deviation_constants(const MartingaleModel& model, double delta, double grid_step = 0.005);

struct DeviationRow {
  double alpha;
  double ell;
  double estimate;
  double std_error;
  double upper;
  double bound;
  bool passed;
};

struct DeviationBoundReport {
  DeviationConstants constants;
  std::vector<DeviationRow> rows;
  long paths = 0;
  long exits = 0;     // paths with T_H^eps within the horizon
  long censored = 0;  // counted at the horizon, which overstates their contribution
  bool passed = true;
};

// Monte Carlo estimate of E[e^{-alpha theta T}; L(T) >= ell] at T = T_H^eps
// against C_delta alpha^{-n} e^{|x| H(chi(x)) - (eps - delta) ell}.
DeviationBoundReport deviation_bound_check(const MartingaleModel& model, const State& x0, double eps, double delta,
                                      const std::vector<double>& alphas, const std::vector<double>& ells,
                                      long paths, double horizon, std::uint64_t seed,
                                      double grid_step = 0.005);

struct ConstancyRow {
  double t;
  double mean;        // mean of J_alpha(t ^ T_0, X(t ^ T_0)) over paths
  double std_error;
  double quad_error;  // mean |difference| between the last two refinement levels
};

struct ConstancyReport {
  double alpha = 0;
  long paths = 0;
  long stopped = 0;  // paths with T_0 <= max t
  int level = 0;
  bool monte_carlo = false;
  std::vector<ConstancyRow> rows;
  double max_z = 0;  // largest |m_a - m_b| / sqrt(se_a^2 + se_b^2) over pairs
  bool passed = true;
};

// Means of J_alpha stopped at the first emptiness time must agree pairwise
// within z combined standard errors.
ConstancyReport martingale_constancy_check(const MartingaleModel& model, const State& x0, double alpha,
                                           const std::vector<double>& times, long paths, std::uint64_t seed,
                                           double z = 3.0, int level = 3);

// g(t, x) = int_{C(t)} h_{hat u}(t, x) f(u)^{alpha-1} du evaluated directly on
// the chart domain (two-node networks only). Nodes for one t serve every x.
// Each side of the origin is integrated in tau = |u|^alpha by tanh-sinh with
// step 2^{-refinement}.
class DirectHarmonic2 {
 public:
  DirectHarmonic2(const MartingaleModel& model, double alpha, int refinement = 6);

  class Slice {
   public:
    double operator()(const State& x) const;

   private:
    friend class DirectHarmonic2;
    std::vector<double> log_weight;       // log(weight * f^{alpha-1} * e^{phi0})
    std::vector<Eigen::VectorXd> phi;     // phi(hat u, t) at the nodes
  };

  Slice at(double t) const;

 private:
  const MartingaleModel* model_;
  double alpha_;
  int refinement_;
};

}  // namespace mobnet
