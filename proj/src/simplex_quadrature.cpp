#include "mobnet/simplex_quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "mobnet/error.hpp"
#include "mobnet/rng.hpp"

namespace mobnet {

namespace {

template <int N>
void gauss_fill(std::vector<double>& x, std::vector<double>& w) {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& a = G::abscissa();
  const auto& wt = G::weights();
  x.clear();
  w.clear();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0) {
      x.push_back(0.5);
      w.push_back(0.5 * wt[k]);
      continue;
    }
    x.push_back(0.5 - 0.5 * a[k]);
    w.push_back(0.5 * wt[k]);
    x.push_back(0.5 + 0.5 * a[k]);
    w.push_back(0.5 * wt[k]);
  }
}

}  // namespace

void gauss_legendre_unit(int points, std::vector<double>& x, std::vector<double>& w) {
  switch (points) {
    case 4: gauss_fill<4>(x, w); break;
    case 8: gauss_fill<8>(x, w); break;
    case 12: gauss_fill<12>(x, w); break;
    case 16: gauss_fill<16>(x, w); break;
    case 20: gauss_fill<20>(x, w); break;
    case 30: gauss_fill<30>(x, w); break;
    default:
      throw MartingaleError(MartingaleErrc::InvalidArgument, "unsupported Gauss-Legendre order");
  }
}

std::vector<Eigen::VectorXd> polytope_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const auto c = a.rows();
  const auto d = a.cols();
  const double tol = 1e-12 * (1.0 + b.cwiseAbs().maxCoeff());
  std::vector<Eigen::VectorXd> out;
  if (d == 0 || c < d) return out;
  // Every d-subset of constraints taken as active.
  std::vector<int> pick(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) pick[static_cast<std::size_t>(k)] = k;
  Eigen::MatrixXd sub(d, d);
  Eigen::VectorXd rhs(d);
  while (true) {
    for (Eigen::Index k = 0; k < d; ++k) {
      sub.row(k) = a.row(pick[static_cast<std::size_t>(k)]);
      rhs(k) = b(pick[static_cast<std::size_t>(k)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (lu.isInvertible() && std::abs(lu.determinant()) > 1e-14 * std::pow(sub.cwiseAbs().maxCoeff(), d)) {
      Eigen::VectorXd y = lu.solve(rhs);
      if (((a * y - b).array() <= tol).all()) out.push_back(std::move(y));
    }
    int k = static_cast<int>(d) - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == static_cast<int>(c - d + k)) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (int l = k + 1; l < d; ++l) pick[static_cast<std::size_t>(l)] = pick[static_cast<std::size_t>(l - 1)] + 1;
  }
  return out;
}

void gauss_jacobi_unit(int points, double beta, std::vector<double>& x, std::vector<double>& w) {
  if (points < 1 || !(beta > -1.0))
    throw MartingaleError(MartingaleErrc::InvalidArgument, "Gauss-Jacobi needs points >= 1 and beta > -1");
  // Golub-Welsch for (1 + x)^beta on [-1, 1], then s = (1 + x) / 2.
  const double b = beta;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(points, points);
  for (int k = 0; k < points; ++k) {
    const double s2 = 2.0 * k + b;
    jac(k, k) = k == 0 ? b / (b + 2.0) : b * b / (s2 * (s2 + 2.0));
    if (k + 1 < points) {
      const double j = k + 1;
      const double t = 2.0 * j + b;
      const double off = std::sqrt(4.0 * j * j * (j + b) * (j + b) / (t * t * (t + 1.0) * (t - 1.0)));
      jac(k, k + 1) = jac(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  const double mu0 = std::pow(2.0, b + 1.0) / (b + 1.0);
  x.resize(static_cast<std::size_t>(points));
  w.resize(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    x[static_cast<std::size_t>(k)] = 0.5 * (1.0 + es.eigenvalues()(k));
    w[static_cast<std::size_t>(k)] = mu0 * v0 * v0 * std::pow(2.0, -b - 1.0);
  }
}

bool coordinate_range(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& v : polytope_vertices(a, b)) {
    lo = std::min(lo, v(0));
    hi = std::max(hi, v(0));
  }
  return lo <= hi;
}

SingularSimplexRule::SingularSimplexRule(const SpectralData& s, double alpha)
    : n_(s.size()), m_(s.size() - 1), alpha_(alpha), pi_(s.stationary()) {
  if (!(alpha > 0)) throw MartingaleError(MartingaleErrc::InvalidArgument, "alpha must be positive");
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(n_, m_);
  for (int k = 0; k < m_; ++k) {
    e(k, k) = 1.0;
    e(n_ - 1, k) = -1.0;
  }
  Eigen::VectorXcd inv_pi = pi_.cwiseInverse().cast<std::complex<double>>();
  Eigen::MatrixXcd full = s.eigenvectors_inverse() * inv_pi.asDiagonal() * e;
  r_.resize(m_, m_);
  for (int j = 0; j < m_; ++j) {
    const double im = s.eigenvalues()(j).imag();
    if (im == 0) {
      blocks_.push_back({false, j});
      r_.row(j) = full.row(j).real();
    } else if (im > 0) {
      blocks_.push_back({true, j});
      r_.row(j) = full.row(j).real();
      r_.row(j + 1) = full.row(j).imag();
      ++j;
    }
  }
  r_inv_ = r_.inverse();
  det_inv_ = std::abs(r_inv_.determinant());
  az_.resize(n_, m_);
  bz_.resize(n_);
  for (int i = 0; i < m_; ++i) {
    az_.row(i) = -r_inv_.row(i);
    bz_(i) = pi_(i);
  }
  az_.row(m_) = r_inv_.colwise().sum();
  bz_(m_) = pi_(n_ - 1);
}

double SingularSimplexRule::f_value(const Eigen::VectorXd& u_tilde) const {
  Eigen::VectorXd z = r_ * (u_tilde.head(m_) - pi_.head(m_));
  double f = 1;
  for (const auto& blk : blocks_)
    f *= blk.pair ? z(blk.first) * z(blk.first) + z(blk.first + 1) * z(blk.first + 1) : std::abs(z(blk.first));
  return f;
}

Eigen::VectorXd SingularSimplexRule::to_simplex(const Eigen::VectorXd& z) const {
  Eigen::VectorXd u = pi_.head(m_) + r_inv_ * z;
  Eigen::VectorXd full(n_);
  full.head(m_) = u;
  full(n_ - 1) = 1.0 - u.sum();
  return full;
}

Eigen::VectorXd SingularSimplexRule::z_from_reduced(const Eigen::VectorXd& w,
                                                    const std::vector<double>& angles) const {
  Eigen::VectorXd z(m_);
  std::size_t a = 0;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    if (blk.pair) {
      z(blk.first) = std::cos(angles[a]) * w(static_cast<Eigen::Index>(k));
      z(blk.first + 1) = std::sin(angles[a]) * w(static_cast<Eigen::Index>(k));
      ++a;
    } else {
      z(blk.first) = w(static_cast<Eigen::Index>(k));
    }
  }
  return z;
}

void SingularSimplexRule::recurse(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int level,
                                  Eigen::VectorXd& w, const std::vector<int>& signs, double weight,
                                  const Rules& rules, const std::vector<double>& angles,
                                  QuadratureNodes& out) const {
  const auto verts = polytope_vertices(a, b);
  if (verts.empty()) return;
  const auto& blk = blocks_[static_cast<std::size_t>(level)];
  const int sign = blk.pair ? 1 : signs[static_cast<std::size_t>(level)];
  // The inner integral is smooth in w(level) between vertex coordinates.
  std::vector<double> cuts;
  for (const auto& v : verts) cuts.push_back(std::max(0.0, sign * v(0)));
  std::sort(cuts.begin(), cuts.end());
  // Vertices on the orthant wall come out of the solve as +-1e-17 or so.
  if (cuts.front() <= 1e-12 * cuts.back()) cuts.front() = 0.0;
  const double span = cuts.back() - cuts.front();
  if (!(span > 1e-15)) return;
  std::vector<double> knots{cuts.front()};
  for (double c : cuts)
    if (c > knots.back() + 1e-12 * span) knots.push_back(c);
  if (knots.size() < 2) return;

  const double beta = blk.pair ? 2.0 * alpha_ - 1.0 : alpha_ - 1.0;
  const auto& jx = blk.pair ? rules.pair_x : rules.real_x;
  const auto& jw = blk.pair ? rules.pair_w : rules.real_w;
  const bool leaf = level + 1 == static_cast<int>(blocks_.size());
  Eigen::MatrixXd a_next = a.rightCols(a.cols() - 1);
  auto emit = [&](double mag, double wgt) {
    const double val = sign * mag;
    w(level) = val;
    if (leaf) {
      Eigen::VectorXd pt = to_simplex(z_from_reduced(w, angles));
      if ((pt.array() <= 0).any()) return;
      out.points.push_back(std::move(pt));
      out.weights.push_back(wgt * det_inv_);
    } else {
      Eigen::VectorXd b_next = b - a.col(0) * val;
      recurse(a_next, b_next, level + 1, w, signs, wgt, rules, angles, out);
    }
  };
  // Panels per segment. A segment starting at 0 gets a Gauss-Jacobi panel for
  // the weight m^beta. A segment [k0, k1] with 0 < k0 << k1 sees m^beta as
  // nearly singular, so beyond 2 k0 it is split evenly in log m.
  // The integrand can behave like a fractional power of the distance to a
  // knot: G does so at the simplex facets, and above the leaf level so does
  // the inner integral where a slice meets an orthant wall. The end panels
  // are graded towards the knots and kept to a quarter of the segment, so the
  // grading map stays analytic well beyond the panel.
  enum class Map { Jacobi, Linear, Log };
  struct Panel {
    Map map;
    double a, b;
    bool left, right;
  };
  std::vector<Panel> plan;
  const int inner = std::max(1, rules.panels - 1);
  auto linear = [&](double lo, double hi, int count) {
    const double h = (hi - lo) / count;
    for (int pn = 0; pn < count; ++pn)
      plan.push_back({Map::Linear, lo + h * pn, pn + 1 == count ? hi : lo + h * (pn + 1), false, false});
  };
  for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
    const double k0 = knots[seg], k1 = knots[seg + 1];
    const double len = k1 - k0;
    if (k0 == 0.0) {
      plan.push_back({Map::Jacobi, 0.0, 0.5 * k1, false, false});
      linear(0.5 * k1, 0.875 * k1, inner + 1);
    } else if (k1 > 3.0 * k0) {
      plan.push_back({Map::Linear, k0, 1.25 * k0, true, false});
      plan.push_back({Map::Linear, 1.25 * k0, 2.0 * k0, false, false});
      const double ratio = std::log(0.875 * k1 / (2.0 * k0));
      const int count = std::max(inner, static_cast<int>(std::ceil(ratio / std::log(4.0))));
      for (int pn = 0; pn < count; ++pn)
        plan.push_back({Map::Log, 2.0 * k0 * std::exp(ratio * pn / count),
                        pn + 1 == count ? 0.875 * k1 : 2.0 * k0 * std::exp(ratio * (pn + 1) / count), false, false});
    } else {
      plan.push_back({Map::Linear, k0, k0 + 0.25 * len, true, false});
      linear(k0 + 0.25 * len, k1 - 0.25 * len, inner);
    }
    plan.push_back({Map::Linear, k1 - 0.25 * len, k1, false, true});
    // Where m^beta is singular at 0 the graded panel is shorter still.
    if (k0 == 0.0 || k1 > 3.0 * k0) plan.back().a = 0.875 * k1;
  }

  constexpr double q_grade = 5.0;
  for (const Panel& pnl : plan) {
    if (pnl.map == Map::Jacobi) {
      // int_0^h m^beta g(m) dm = h^{beta+1} sum w_k g(h s_k)
      const double scale = std::pow(pnl.b, beta + 1.0);
      for (std::size_t q = 0; q < jx.size(); ++q) emit(pnl.b * jx[q], weight * scale * jw[q]);
      continue;
    }
    for (std::size_t q = 0; q < rules.gx.size(); ++q) {
      const double x = rules.gx[q];
      double y = x, dy = 1.0;
      if (pnl.left && pnl.right) {
        const double a1 = std::pow(x, q_grade), a2 = std::pow(1.0 - x, q_grade);
        y = a1 / (a1 + a2);
        dy = q_grade * std::pow(x * (1.0 - x), q_grade - 1.0) / ((a1 + a2) * (a1 + a2));
      } else if (pnl.left) {
        y = std::pow(x, q_grade);
        dy = q_grade * std::pow(x, q_grade - 1.0);
      } else if (pnl.right) {
        y = 1.0 - std::pow(1.0 - x, q_grade);
        dy = q_grade * std::pow(1.0 - x, q_grade - 1.0);
      }
      double m, dm;
      if (pnl.map == Map::Linear) {
        m = pnl.a + (pnl.b - pnl.a) * y;
        dm = (pnl.b - pnl.a) * dy;
      } else {
        const double l = std::log(pnl.b / pnl.a);
        m = pnl.a * std::exp(l * y);
        dm = m * l * dy;
      }
      emit(m, weight * dm * rules.gw[q] * std::pow(m, beta));
    }
  }
}

QuadratureNodes SingularSimplexRule::tensor(int panels, int points) const {
  QuadratureNodes out;
  const int nb = static_cast<int>(blocks_.size());
  int reals = 0;
  for (const auto& blk : blocks_)
    if (!blk.pair) ++reals;
  Rules rules;
  rules.panels = panels;
  gauss_legendre_unit(points, rules.gx, rules.gw);
  gauss_jacobi_unit(points, alpha_ - 1.0, rules.real_x, rules.real_w);
  gauss_jacobi_unit(points, 2.0 * alpha_ - 1.0, rules.pair_x, rules.pair_w);
  const auto& gx = rules.gx;
  const auto& gw = rules.gw;
  const double two_pi = 2.0 * std::numbers::pi;

  // Angular nodes per pair, split where a ray through pi meets a vertex of
  // some orthant piece of the simplex.
  std::vector<std::vector<std::pair<double, double>>> angle_nodes;
  for (const auto& blk : blocks_) {
    if (!blk.pair) continue;
    std::vector<double> cuts{0.0, two_pi};
    for (int mask = 0; mask < (1 << reals); ++mask) {
      Eigen::MatrixXd a(n_ + reals, m_);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(n_ + reals);
      a.setZero();
      a.topRows(n_) = az_;
      b.head(n_) = bz_;
      int bit = 0;
      for (const auto& other : blocks_) {
        if (other.pair) continue;
        a(n_ + bit, other.first) = (mask >> bit) & 1 ? 1.0 : -1.0;
        ++bit;
      }
      for (const auto& v : polytope_vertices(a, b)) {
        const double x = v(blk.first), y = v(blk.first + 1);
        if (std::hypot(x, y) < 1e-14) continue;
        double ang = std::atan2(y, x);
        if (ang < 0) ang += two_pi;
        cuts.push_back(ang);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::pair<double, double>> nodes;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double h = (cuts[k + 1] - cuts[k]) / panels;
      if (!(h > 1e-13)) continue;
      for (int pn = 0; pn < panels; ++pn)
        for (std::size_t q = 0; q < gx.size(); ++q) nodes.emplace_back(cuts[k] + h * (pn + gx[q]), h * gw[q]);
    }
    angle_nodes.push_back(std::move(nodes));
  }
  long angle_combos = 1;
  for (const auto& nodes : angle_nodes) angle_combos *= static_cast<long>(nodes.size());

  for (long ac = 0; ac < angle_combos; ++ac) {
    std::vector<double> angles;
    double angle_weight = 1;
    long rest = ac;
    for (const auto& nodes : angle_nodes) {
      const auto size = static_cast<long>(nodes.size());
      const auto& node = nodes[static_cast<std::size_t>(rest % size)];
      rest /= size;
      angles.push_back(node.first);
      angle_weight *= node.second;
    }
    // Reduced variables w -> z.
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m_, nb);
    std::size_t ai = 0;
    for (int k = 0; k < nb; ++k) {
      const auto& blk = blocks_[static_cast<std::size_t>(k)];
      if (blk.pair) {
        t(blk.first, k) = std::cos(angles[ai]);
        t(blk.first + 1, k) = std::sin(angles[ai]);
        ++ai;
      } else {
        t(blk.first, k) = 1.0;
      }
    }
    Eigen::MatrixXd a_base = az_ * t;
    for (int mask = 0; mask < (1 << reals); ++mask) {
      std::vector<int> signs(static_cast<std::size_t>(nb), 1);
      int bit = 0;
      for (int k = 0; k < nb; ++k)
        if (!blocks_[static_cast<std::size_t>(k)].pair) signs[static_cast<std::size_t>(k)] = (mask >> bit++) & 1 ? -1 : 1;
      Eigen::MatrixXd a(n_ + nb, nb);
      Eigen::VectorXd b(n_ + nb);
      a.topRows(n_) = a_base;
      b.head(n_) = bz_;
      a.bottomRows(nb).setZero();
      b.tail(nb).setZero();
      for (int k = 0; k < nb; ++k) a(n_ + k, k) = -signs[static_cast<std::size_t>(k)];
      Eigen::VectorXd w(nb);
      recurse(a, b, 0, w, signs, angle_weight, rules, angles, out);
    }
  }
  return out;
}

QuadratureNodes SingularSimplexRule::monte_carlo(std::size_t samples, std::uint64_t seed) const {
  QuadratureNodes out;
  out.monte_carlo = true;
  out.samples = samples;
  // Bounding radii from the simplex vertices.
  std::vector<double> radius(blocks_.size(), 0.0);
  for (int v = 0; v < n_; ++v) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m_);
    if (v < m_) u(v) = 1.0;
    Eigen::VectorXd z = r_ * (u - pi_.head(m_));
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      double size = blk.pair ? std::hypot(z(blk.first), z(blk.first + 1)) : std::abs(z(blk.first));
      radius[k] = std::max(radius[k], size);
    }
  }
  double scale = det_inv_ / static_cast<double>(samples);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const double p = blocks_[k].pair ? 2.0 * alpha_ : alpha_;
    scale *= blocks_[k].pair ? std::numbers::pi * std::pow(radius[k], p) / alpha_
                             : 2.0 * std::pow(radius[k], p) / alpha_;
  }
  RngStream rng(seed, 0);
  Eigen::VectorXd z(m_);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      double v = rng.uniform();
      if (k == 0) v = (static_cast<double>(s) + v) / static_cast<double>(samples);
      if (blk.pair) {
        const double r = radius[k] * std::pow(v, 1.0 / (2.0 * alpha_));
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        z(blk.first) = r * std::cos(phi);
        z(blk.first + 1) = r * std::sin(phi);
      } else {
        const double mag = radius[k] * std::pow(v, 1.0 / alpha_);
        z(blk.first) = rng.uniform() < 0.5 ? -mag : mag;
      }
    }
    Eigen::VectorXd pt = to_simplex(z);
    if ((pt.array() <= 0).any()) continue;
    out.points.push_back(std::move(pt));
    out.weights.push_back(scale);
  }
  return out;
}

}  // namespace mobnet
