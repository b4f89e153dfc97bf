#include "mobnet/flow.hpp"

#include <cmath>

#include "kronrod.hpp"

namespace mobnet {

namespace {

struct Piece {
  double value = 0;
  double error = 0;
};

template <class Fn>
Piece integrate(Fn&& f, double a, double b) {
  Piece p;
  p.value = detail::kronrod(f, a, b, 1e-12, 15, &p.error);
  return p;
}

}  // namespace

double apply_generator(const SpectralData& s, const NetworkParams& p,
                       const std::function<double(const State&)>& f, const State& x) {
  const int n = s.size();
  const double fx = f(x);
  double out = 0;
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (p.arrival[ui] > 0) {
      State y = x;
      y.add(i);
      out += p.arrival[ui] * (f(y) - fx);
    }
    if (x[i] > 0) {
      if (p.capacity[ui] > 0) {
        State y = x;
        y.remove(i);
        out += p.capacity[ui] * (f(y) - fx);
      }
      for (int j = 0; j < n; ++j) {
        if (j == i || s.rates().rate(i, j) == 0) continue;
        State y = x;
        y.move(i, j);
        out += s.rates().rate(i, j) * static_cast<double>(x[i]) * (f(y) - fx);
      }
    }
  }
  return out;
}

MartingaleModel::MartingaleModel(SpectralData s, NetworkParams p) : s_(std::move(s)), p_(std::move(p)) {
  p_.check(s_.size());
}

bool MartingaleModel::in_hyperplane(const Eigen::VectorXd& v) const {
  if (v.size() != size()) return false;
  return std::abs(s_.stationary().dot(v)) <= 1e-10 * std::max(1.0, v.cwiseAbs().maxCoeff());
}

bool MartingaleModel::in_domain(const Eigen::VectorXd& v, double t) const {
  if (!in_hyperplane(v)) return false;
  Eigen::VectorXd phi = flow(v, t);
  return (phi.array() + 1.0 > kPositivityFloor).all();
}

double MartingaleModel::potential_rate(const Eigen::VectorXd& phi) const {
  double r = 0;
  for (int i = 0; i < size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double d = 1.0 + phi(i);
    if (std::abs(d) < kPositivityFloor)
      throw MartingaleError(MartingaleErrc::AdmissibilityViolation, "1 + phi_i vanishes along the flow");
    r += p_.capacity[ui] * phi(i) / d - p_.arrival[ui] * phi(i);
  }
  return r;
}

PotentialValue MartingaleModel::potential0(const Eigen::VectorXd& v) const {
  if (!in_hyperplane(v))
    throw MartingaleError(MartingaleErrc::NotInHyperplane, "potential needs sum pi_i v_i = 0");
  if (!in_domain(v, 0.0))
    throw MartingaleError(MartingaleErrc::DomainViolation, "potential needs 1 + v_i > 0");
  return potential_of_level(v.array() + 1.0);
}

PotentialValue MartingaleModel::potential_of_level(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd v = w.array() - 1.0;
  const double norm = v.cwiseAbs().maxCoeff();
  const double rate = p_.total_arrival() + 2.0 * p_.total_capacity();
  if (norm == 0 || rate == 0) return {0.0, 0.0, 0.0};

  // For s <= -T: |phi_i| <= n B |v| e^{eta s} <= 1/2, so the integrand is at
  // most rate * n B |v| e^{eta s}.
  const int n = size();
  const double b = s_.mixing_prefactor(), eta = s_.gap();
  const double amp = n * b * norm;
  const double tail_tol = 1e-13;
  double cutoff = std::log(amp * rate / (eta * tail_tol)) / eta;
  cutoff = std::max({cutoff, std::log(2.0 * amp) / eta, 1.0 / eta});
  const double tail = rate * amp * std::exp(-eta * cutoff) / eta;

  // phi(s) = P_{-s} v loses relative accuracy in 1 + phi_i when that is tiny.
  // There 1 + phi(s) = e^{Q |s|} w is applied by uniformization, a sum of
  // nonnegative terms, for short times and through the eigenbasis otherwise.
  const Eigen::VectorXcd cv = s_.eigenvectors_inverse() * v.cast<std::complex<double>>();
  const Eigen::VectorXcd cw = s_.eigenvectors_inverse() * w.cast<std::complex<double>>();
  const Eigen::VectorXcd& theta = s_.eigenvalues();
  const Eigen::MatrixXcd& omega = s_.eigenvectors();
  const double unif = s_.q().diagonal().cwiseAbs().maxCoeff();
  const Eigen::MatrixXd jump = Eigen::MatrixXd::Identity(n, n) + s_.q() / unif;
  Eigen::VectorXcd ev(n), ew(n);
  Eigen::VectorXd lev(n), term(n);
  auto f = [&](double s) {
    for (int j = 0; j < n; ++j) ev(j) = std::exp(theta(j) * (-s)) * cv(j);
    const Eigen::VectorXd phi = (omega * ev).real();
    const double mass = unif * (-s);
    if (mass <= 4.0) {
      const double w0 = std::exp(-mass);
      term = w;
      lev = w0 * w;
      double coef = w0;
      for (int k = 1; k < 80 && coef > 1e-18 * w0; ++k) {
        term = jump * term;
        coef *= mass / k;
        lev += coef * term;
      }
    } else {
      for (int j = 0; j < n; ++j) ew(j) = std::exp(theta(j) * (-s)) * cw(j);
      lev = (omega * ew).real();
    }
    double r = 0;
    for (int i = 0; i < n; ++i) {
      const bool small = std::abs(phi(i)) < 0.5;
      const double d = small ? 1.0 + phi(i) : lev(i);
      const double p = small ? phi(i) : lev(i) - 1.0;
      if (d <= kPositivityFloor) throw MartingaleError(MartingaleErrc::DomainViolation, "flow left the domain");
      const auto ui = static_cast<std::size_t>(i);
      r += p_.capacity[ui] * p / d - p_.arrival[ui] * p;
    }
    return r;
  };

  // Near s = 0 the integrand varies on the scale of min(1 + v_i); break the
  // range geometrically down to that scale.
  const double margin = w.minCoeff();
  const double qscale = 1.0 + s_.q().cwiseAbs().maxCoeff();
  const double finest = std::min(1.0, 0.01 * margin / qscale);
  std::vector<double> cuts{-cutoff};
  for (double s = -1.0; s <= -finest; s *= 0.1)
    if (s > cuts.back()) cuts.push_back(s);
  cuts.push_back(0.0);

  PotentialValue out{0.0, tail, cutoff};
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (!(cuts[k + 1] > cuts[k])) continue;
    Piece p = integrate(f, cuts[k], cuts[k + 1]);
    out.value += p.value;
    out.error += p.error;
  }
  return out;
}

double MartingaleModel::primitive(const Eigen::VectorXd& v, double t) const {
  if (in_hyperplane(v) && in_domain(v, t)) return potential0(flow(v, t)).value;
  // Anchored primitive: integral of the rate from 0 to t.
  if (t == 0) return 0.0;
  auto f = [&](double s) { return potential_rate(flow(v, s)); };
  double a = std::min(0.0, t), b = std::max(0.0, t);
  Piece p = integrate(f, a, b);
  return t > 0 ? p.value : -p.value;
}

double MartingaleModel::harmonic_h(const Eigen::VectorXd& v, double t, const State& x) const {
  if (v.size() != size() || x.size() != size())
    throw MartingaleError(MartingaleErrc::InvalidArgument, "dimension mismatch");
  Eigen::VectorXd phi = flow(v, t);
  double log_abs = 0;
  bool negative = false;
  for (int i = 0; i < size(); ++i) {
    const double base = 1.0 + phi(i);
    if (std::abs(base) < kPositivityFloor)
      throw MartingaleError(MartingaleErrc::AdmissibilityViolation, "1 + phi_i(v, t) = 0");
    if (x[i] == 0) continue;
    log_abs += static_cast<double>(x[i]) * std::log(std::abs(base));
    if (base < 0 && (x[i] % 2 == 1)) negative = !negative;
  }
  const double value = std::exp(primitive(v, t) + log_abs);
  return negative ? -value : value;
}

double MartingaleModel::psi(const Eigen::VectorXd& v) const {
  Eigen::VectorXcd c = s_.eigenvectors_inverse() * v.cast<std::complex<double>>();
  double out = 1;
  for (int j = 0; j < size() - 1; ++j) out *= std::abs(c(j));
  return out;
}

double MartingaleModel::F(const Eigen::VectorXd& rho) const {
  check_simplex_point(rho);
  return psi(rho.cwiseQuotient(s_.stationary()));
}

double MartingaleModel::log_G(const Eigen::VectorXd& rho) const {
  check_simplex_point(rho);
  if ((rho.array() <= 0).any())
    throw MartingaleError(MartingaleErrc::BoundaryPoint, "G is evaluated on the open simplex only");
  return potential_of_level(rho.cwiseQuotient(s_.stationary())).value;
}

double MartingaleModel::G(const Eigen::VectorXd& rho) const { return std::exp(log_G(rho)); }

// ---------------------------------------------------------------- chart

SimplexChart::SimplexChart(const SpectralData& s) : s_(s), n_(s.size()), pi_(s.stationary()) {}

Eigen::VectorXd SimplexChart::hat(const Eigen::VectorXd& u) const {
  Eigen::VectorXd v(n_);
  v.head(n_ - 1) = u;
  v(n_ - 1) = -pi_.head(n_ - 1).dot(u) / pi_(n_ - 1);
  return v;
}

Eigen::VectorXd SimplexChart::tilde(const Eigen::VectorXd& u) const {
  Eigen::VectorXd v(n_);
  v.head(n_ - 1) = u;
  v(n_ - 1) = 1.0 - u.sum();
  return v;
}

Eigen::VectorXd SimplexChart::project(const Eigen::VectorXd& v) const { return v.head(n_ - 1); }

Eigen::VectorXd SimplexChart::forward(double t, const Eigen::VectorXd& u) const {
  Eigen::VectorXd w = s_.apply(-t, hat(u)).array() + 1.0;
  return project(pi_.cwiseProduct(w));
}

Eigen::VectorXd SimplexChart::inverse(double t, const Eigen::VectorXd& u) const {
  Eigen::VectorXd w = tilde(u).cwiseQuotient(pi_).array() - 1.0;
  return project(s_.apply(t, w));
}

Eigen::MatrixXd SimplexChart::linear_part(double t) const {
  Eigen::MatrixXd m(n_ - 1, n_ - 1);
  for (int k = 0; k < n_ - 1; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_ - 1);
    e(k) = 1.0;
    m.col(k) = project(pi_.cwiseProduct(s_.apply(-t, hat(e))));
  }
  return m;
}

double SimplexChart::jacobian(double t) const {
  return std::exp(s_.trace_rate() * t) * pi_.head(n_ - 1).prod();
}

bool SimplexChart::in_chart(double t, const Eigen::VectorXd& u) const {
  Eigen::VectorXd phi = s_.apply(-t, hat(u));
  return (phi.array() + 1.0 > 0).all();
}

bool SimplexChart::in_open_simplex(const Eigen::VectorXd& u) {
  return (u.array() > 0).all() && u.sum() < 1.0;
}

}  // namespace mobnet
