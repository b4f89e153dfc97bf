#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mobnet/error.hpp"

namespace mobnet {

// Generator of the single-particle chain. Off-diagonal entries are rates,
// rows sum to zero.
class RateMatrix {
 public:
  // Validates shape, signs and row sums. Irreducibility is checked by validate().
  explicit RateMatrix(Eigen::MatrixXd q);

  // Missing diagonal entries (std::nullopt) are filled with minus the row sum.
  static RateMatrix from_rows(const std::vector<std::vector<std::optional<double>>>& rows);

  int size() const { return static_cast<int>(q_.rows()); }
  const Eigen::MatrixXd& matrix() const { return q_; }
  double rate(int i, int j) const { return q_(i, j); }
  double exit_rate(int i) const { return -q_(i, i); }

 private:
  Eigen::MatrixXd q_;
};

struct MixingConstants {
  double prefactor;  // B
  double gap;        // eta
};

// Spectral data of a validated irreducible, diagonalizable rate matrix.
//
// Eigenvalues are ordered so that the zero eigenvalue is last, the others by
// decreasing real part, complex conjugates adjacent (positive imaginary part
// first). The last eigenvector is the all-ones vector.
class SpectralData {
 public:
  int size() const { return rates_.size(); }
  const RateMatrix& rates() const { return rates_; }
  const Eigen::MatrixXd& q() const { return rates_.matrix(); }
  const Eigen::VectorXcd& eigenvalues() const { return theta_; }
  const Eigen::MatrixXcd& eigenvectors() const { return omega_; }
  const Eigen::MatrixXcd& eigenvectors_inverse() const { return omega_inv_; }
  const Eigen::VectorXd& stationary() const { return pi_; }
  double trace_rate() const { return trace_rate_; }
  double gap() const { return gap_; }
  double mixing_prefactor() const { return mixing_.prefactor; }
  double condition_number() const { return cond_; }
  bool is_real() const;

  // P_t = exp(tQ) for any real t (negative t gives the inverse).
  Eigen::MatrixXd semigroup(double t) const;
  // P_t v without forming the matrix.
  Eigen::VectorXd apply(double t, const Eigen::VectorXd& v) const;
  // rho P_t for a row vector rho.
  Eigen::VectorXd evolve(const Eigen::VectorXd& rho, double t) const;

 private:
  friend SpectralData validate(const RateMatrix&);
  explicit SpectralData(RateMatrix r) : rates_(std::move(r)) {}

  RateMatrix rates_;
  Eigen::VectorXcd theta_;
  Eigen::MatrixXcd omega_;
  Eigen::MatrixXcd omega_inv_;
  Eigen::VectorXd pi_;
  double trace_rate_ = 0;
  double gap_ = 0;
  double cond_ = 0;
  MixingConstants mixing_{0, 0};
};

constexpr double kMaxEigenvectorCondition = 1e8;

SpectralData validate(const RateMatrix& q);

// Grid-certified B on [0, 20/eta] with a 10% margin; eta from the spectrum.
MixingConstants mixing_constants(const SpectralData& s);

// Largest |(P_t - Pi)_{ij}| e^{eta t} on the certification grid, without margin.
double mixing_ratio_sup(const SpectralData& s);

bool is_irreducible(const Eigen::MatrixXd& q);

}  // namespace mobnet
