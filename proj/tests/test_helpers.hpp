#pragma once

#include <Eigen/Dense>
#include <random>

#include "mobnet/spectral.hpp"

namespace mobnet::testing {

// Random irreducible rate matrix: a directed cycle plus random extra edges.
inline Eigen::MatrixXd random_rate_matrix(int n, std::mt19937_64& g, double density = 0.5) {
  std::uniform_real_distribution<double> rate(0.2, 2.0), coin(0.0, 1.0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) q(i, (i + 1) % n) = rate(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && q(i, j) == 0 && coin(g) < density) q(i, j) = rate(g);
  for (int i = 0; i < n; ++i) q(i, i) = -(q.row(i).sum());
  return q;
}

inline Eigen::MatrixXd two_node(double a, double b) {
  Eigen::MatrixXd q(2, 2);
  q << -a, a, b, -b;
  return q;
}

inline Eigen::MatrixXd cycle3() {
  Eigen::MatrixXd q(3, 3);
  q << -1, 1, 0, 0, -1, 1, 1, 0, -1;
  return q;
}

inline Eigen::MatrixXd complete3() {
  Eigen::MatrixXd q(3, 3);
  q << -2, 1, 1, 1, -2, 1, 1, 1, -2;
  return q;
}

}  // namespace mobnet::testing
