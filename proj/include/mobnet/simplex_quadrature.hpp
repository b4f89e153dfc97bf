#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mobnet/spectral.hpp"

namespace mobnet {

// Weighted nodes for integrals over the open simplex S in R^{n-1} against
// F(u~)^{alpha-1}. Points are stored as full vectors u~ = (u, 1 - sum u).
struct QuadratureNodes {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
  bool monte_carlo = false;
  std::size_t samples = 0;  // Monte Carlo draws, including rejected ones
};

// Integrates Phi(u~) F(u~)^{alpha-1} du over S.
//
// F is a product of |linear forms| that all vanish at u~ = pi. In the real
// eigen-coordinates z of those forms, F = prod |z_j| * prod (z_a^2 + z_b^2),
// the second product running over complex-conjugate pairs. Each sign orthant
// (and polar angle, for pairs) is integrated iteratively. The panel touching
// z = 0 uses Gauss-Jacobi nodes for the weight |z|^{alpha-1} (r^{2 alpha-1} for
// pairs); every coordinate is split at the vertices of its slice polytope so
// the rule sees only smooth pieces.
class SingularSimplexRule {
 public:
  SingularSimplexRule(const SpectralData& s, double alpha);

  int dim() const { return m_; }
  double alpha() const { return alpha_; }

  // Composite Gauss-Legendre with the given panel count per coordinate.
  QuadratureNodes tensor(int panels, int points = 12) const;

  // Importance sampling with density proportional to F^{alpha-1} on a box
  // around the image of S; the first uniform coordinate is stratified.
  QuadratureNodes monte_carlo(std::size_t samples, std::uint64_t seed) const;

  // F in the real eigen-coordinates of u~.
  double f_value(const Eigen::VectorXd& u_tilde) const;

 private:
  struct Block {
    bool pair;
    int first;  // z index (pairs use first and first + 1)
  };

  struct Rules {
    int panels;
    std::vector<double> gx, gw;                  // Gauss-Legendre on [0, 1]
    std::vector<double> real_x, real_w;          // weight s^{alpha-1} on [0, 1]
    std::vector<double> pair_x, pair_w;          // weight s^{2 alpha-1} on [0, 1]
  };

  void recurse(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int level, Eigen::VectorXd& w,
               const std::vector<int>& signs, double weight, const Rules& rules,
               const std::vector<double>& angles, QuadratureNodes& out) const;
  Eigen::VectorXd to_simplex(const Eigen::VectorXd& z) const;
  Eigen::VectorXd z_from_reduced(const Eigen::VectorXd& w, const std::vector<double>& angles) const;

  int n_, m_;
  double alpha_;
  Eigen::VectorXd pi_;
  Eigen::MatrixXd r_;      // z = r_ (u - pi')
  Eigen::MatrixXd r_inv_;  // u = pi' + r_inv_ z
  double det_inv_;
  std::vector<Block> blocks_;
  Eigen::MatrixXd az_;  // simplex constraints az_ z <= bz_
  Eigen::VectorXd bz_;
};

// Range [lo, hi] of the first coordinate of {y : a y <= b}; false when empty.
// Vertices of {y : a y <= b} by enumerating d-subsets of active constraints.
std::vector<Eigen::VectorXd> polytope_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

bool coordinate_range(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double& lo, double& hi);

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int points, std::vector<double>& x, std::vector<double>& w);

// Gauss-Jacobi nodes and weights on [0, 1] for the weight s^beta, beta > -1.
void gauss_jacobi_unit(int points, double beta, std::vector<double>& x, std::vector<double>& w);

}  // namespace mobnet
