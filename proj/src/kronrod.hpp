#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mobnet::detail {

// Adaptive 61-point Gauss-Kronrod on [a, b]. Boost compares the unscaled
// error of each subinterval against a scaled tolerance, which makes short
// intervals recurse to max depth; mapping onto [-1, 1] first avoids that.
template <class F>
double kronrod(F&& f, double a, double b, double tol, unsigned max_depth, double* error) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  auto g = [&](double x) { return f(mid + half * x); };
  double err = 0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, -1.0, 1.0, max_depth, tol, &err);
  if (error) *error = err * std::abs(half);
  return v * half;
}

}  // namespace mobnet::detail
