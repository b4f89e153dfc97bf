#pragma once

#include <Eigen/Dense>
#include <functional>

#include "mobnet/spectral.hpp"
#include "mobnet/state.hpp"

namespace mobnet {

// (Omega f)(x) for the open network generator.
double apply_generator(const SpectralData& s, const NetworkParams& p,
                       const std::function<double(const State&)>& f, const State& x);

struct PotentialValue {
  double value;
  double error;   // quadrature estimate plus analytic tail bound
  double cutoff;  // T*, integration runs over [-T*, 0]
};

// Dual flow, potential and harmonic functions for fixed (Q, lambda, mu).
class MartingaleModel {
 public:
  MartingaleModel(SpectralData s, NetworkParams p);

  const SpectralData& spectral() const { return s_; }
  const NetworkParams& params() const { return p_; }
  int size() const { return s_.size(); }

  // phi(v, t) = P_{-t} v.
  Eigen::VectorXd flow(const Eigen::VectorXd& v, double t) const { return s_.apply(-t, v); }

  bool in_hyperplane(const Eigen::VectorXd& v) const;
  // v in H and 1 + phi_i(v, t) > floor for all i.
  bool in_domain(const Eigen::VectorXd& v, double t) const;

  // phi_0(v) = int_{-inf}^0 sum_i (mu_i phi_i / (1 + phi_i) - lambda_i phi_i) ds, v in D(0).
  PotentialValue potential0(const Eigen::VectorXd& v) const;

  // Integrand of the potential at flow value phi.
  double potential_rate(const Eigen::VectorXd& phi) const;

  // A primitive of the potential rate along the flow. On D(t) this is
  // phi_0(P_{-t} v); elsewhere it is anchored at t = 0.
  double primitive(const Eigen::VectorXd& v, double t) const;

  // h_v(t, x) = exp(primitive) prod_i (1 + phi_i(v, t))^{x_i}.
  double harmonic_h(const Eigen::VectorXd& v, double t, const State& x) const;

  // psi(v) = prod_{j<n} |(omega^{-1} v)_j|.
  double psi(const Eigen::VectorXd& v) const;
  // F(rho) = psi(Delta^{-1} rho), rho in the simplex.
  double F(const Eigen::VectorXd& rho) const;
  // G(rho) = exp(phi_0(Delta^{-1} rho - 1)), rho in the open simplex.
  double G(const Eigen::VectorXd& rho) const;
  double log_G(const Eigen::VectorXd& rho) const;

  static constexpr double kPositivityFloor = 1e-14;

 private:
  // phi_0(w - 1) for w = 1 + v > 0 given directly.
  PotentialValue potential_of_level(const Eigen::VectorXd& w) const;

  SpectralData s_;
  NetworkParams p_;
};

// Change of variables between R^{n-1} and the hyperplane / simplex.
class SimplexChart {
 public:
  explicit SimplexChart(const SpectralData& s);

  int dim() const { return n_ - 1; }
  Eigen::VectorXd hat(const Eigen::VectorXd& u) const;      // (u, -sum pi_i u_i / pi_n)
  Eigen::VectorXd tilde(const Eigen::VectorXd& u) const;    // (u, 1 - sum u_i)
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;  // first n-1 coordinates
  Eigen::VectorXd forward(double t, const Eigen::VectorXd& u) const;  // Psi_t
  Eigen::VectorXd inverse(double t, const Eigen::VectorXd& u) const;  // Psi_t^{-1}
  Eigen::MatrixXd linear_part(double t) const;                        // D Psi_t
  double jacobian(double t) const;                                    // e^{theta t} prod_{i<n} pi_i
  bool in_chart(double t, const Eigen::VectorXd& u) const;            // 1 + phi(hat u, t) > 0
  static bool in_open_simplex(const Eigen::VectorXd& u);

 private:
  SpectralData s_;
  int n_;
  Eigen::VectorXd pi_;
};

}  // namespace mobnet
