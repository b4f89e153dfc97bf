#include "mobnet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace mobnet {

namespace {

constexpr double kRowSumTol = 1e-12;

void reach(const Eigen::MatrixXd& q, bool forward, std::vector<bool>& seen) {
  const int n = static_cast<int>(q.rows());
  std::deque<int> queue{0};
  seen.assign(n, false);
  seen[0] = true;
  while (!queue.empty()) {
    int i = queue.front();
    queue.pop_front();
    for (int j = 0; j < n; ++j) {
      double r = forward ? q(i, j) : q(j, i);
      if (j != i && r > 0 && !seen[j]) {
        seen[j] = true;
        queue.push_back(j);
      }
    }
  }
}

struct Mode {
  std::complex<double> value;
  Eigen::VectorXcd vector;
};

// Orthonormal basis of ker(A) from the SVD, counting singular values below tol.
template <class Mat>
Mat null_space(const Mat& a, double tol) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > tol) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

Eigen::VectorXcd normalized(Eigen::VectorXcd v) {
  v /= v.norm();
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  std::complex<double> phase = v(arg) / std::abs(v(arg));
  return v / phase;
}

}  // namespace

RateMatrix::RateMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {
  const auto n = q_.rows();
  if (n < 2 || q_.cols() != n)
    throw SpectralError(SpectralErrc::InvalidShape, "rate matrix must be square with n >= 2");
  for (Eigen::Index i = 0; i < n; ++i) {
    double scale = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(q_(i, j)))
        throw SpectralError(SpectralErrc::InvalidRate, "non-finite rate");
      if (i != j && q_(i, j) < 0) {
        std::ostringstream os;
        os << "negative off-diagonal rate at (" << i + 1 << "," << j + 1 << ")";
        throw SpectralError(SpectralErrc::InvalidRate, os.str());
      }
      scale = std::max(scale, std::abs(q_(i, j)));
    }
    if (std::abs(q_.row(i).sum()) > kRowSumTol * std::max(1.0, scale)) {
      std::ostringstream os;
      os << "row " << i + 1 << " sums to " << q_.row(i).sum();
      throw SpectralError(SpectralErrc::RowSumViolation, os.str());
    }
  }
}

RateMatrix RateMatrix::from_rows(const std::vector<std::vector<std::optional<double>>>& rows) {
  const auto n = rows.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw SpectralError(SpectralErrc::InvalidShape, "rate matrix rows must all have length n");
    double off = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!rows[i][j])
        throw SpectralError(SpectralErrc::InvalidRate, "only diagonal entries may be omitted");
      q(i, j) = *rows[i][j];
      off += *rows[i][j];
    }
    q(i, i) = rows[i][i] ? *rows[i][i] : -off;
  }
  return RateMatrix(std::move(q));
}

bool is_irreducible(const Eigen::MatrixXd& q) {
  std::vector<bool> fwd, bwd;
  reach(q, true, fwd);
  reach(q, false, bwd);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

bool SpectralData::is_real() const {
  return (theta_.imag().array() == 0.0).all();
}

Eigen::MatrixXd SpectralData::semigroup(double t) const {
  Eigen::VectorXcd e = (theta_ * t).array().exp();
  Eigen::MatrixXcd p = omega_ * e.asDiagonal() * omega_inv_;
  double re = p.real().cwiseAbs().maxCoeff();
  double im = p.imag().cwiseAbs().maxCoeff();
  if (im > 1e-9 * std::max(1.0, re))
    throw SpectralError(SpectralErrc::ImaginaryResidue, "imaginary part of P_t above tolerance");
  return p.real();
}

Eigen::VectorXd SpectralData::apply(double t, const Eigen::VectorXd& v) const {
  Eigen::VectorXcd c = omega_inv_ * v.cast<std::complex<double>>();
  c.array() *= (theta_ * t).array().exp();
  return (omega_ * c).real();
}

Eigen::VectorXd SpectralData::evolve(const Eigen::VectorXd& rho, double t) const {
  Eigen::RowVectorXcd c = rho.transpose().cast<std::complex<double>>() * omega_;
  c.array() *= (theta_ * t).array().exp().transpose();
  return (c * omega_inv_).real().transpose();
}

SpectralData validate(const RateMatrix& rates) {
  const Eigen::MatrixXd& q = rates.matrix();
  const int n = rates.size();
  if (!is_irreducible(q))
    throw SpectralError(SpectralErrc::NotIrreducible, "rate matrix is not irreducible");

  SpectralData s(rates);
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  const double cluster_tol = 1e-7 * scale;
  const double null_tol = 1e-9 * scale;

  Eigen::EigenSolver<Eigen::MatrixXd> es(q);
  if (es.info() != Eigen::Success)
    throw SpectralError(SpectralErrc::NotDiagonalizable, "eigen decomposition failed");
  Eigen::VectorXcd raw = es.eigenvalues();
  Eigen::MatrixXcd raw_vec = es.eigenvectors();

  // The zero eigenvalue is simple for irreducible Q.
  Eigen::Index zero = 0;
  raw.cwiseAbs().minCoeff(&zero);

  // Group the remaining eigenvalues into clusters of numerically equal values.
  std::vector<int> idx;
  for (int k = 0; k < n; ++k)
    if (k != zero) idx.push_back(k);
  std::vector<std::vector<int>> clusters;
  std::vector<bool> used(n, false);
  for (int k : idx) {
    if (used[k]) continue;
    std::vector<int> c{k};
    used[k] = true;
    for (int l : idx)
      if (!used[l] && std::abs(raw(l) - raw(k)) < cluster_tol) {
        c.push_back(l);
        used[l] = true;
      }
    clusters.push_back(c);
  }

  // Each group is a real mode or a conjugate pair; collect them and sort.
  struct Group {
    std::vector<Mode> modes;
    double re, im;
  };
  std::vector<Group> groups;
  for (const auto& c : clusters) {
    std::complex<double> mean = 0;
    for (int k : c) mean += raw(k);
    mean /= static_cast<double>(c.size());
    const bool real = std::abs(mean.imag()) < cluster_tol;
    if (!real && mean.imag() < 0) continue;  // produced from its conjugate
    std::vector<Eigen::VectorXcd> basis;
    if (c.size() == 1) {
      Eigen::VectorXcd v = raw_vec.col(c[0]);
      if (real) v = v.real().cast<std::complex<double>>();
      basis.push_back(v);
    } else if (real) {
      Eigen::MatrixXd a = q - mean.real() * Eigen::MatrixXd::Identity(n, n);
      Eigen::MatrixXd ns = null_space(a, null_tol);
      if (ns.cols() < static_cast<Eigen::Index>(c.size()))
        throw SpectralError(SpectralErrc::NotDiagonalizable, "defective repeated eigenvalue");
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(c.size()); ++k)
        basis.push_back(ns.col(k).cast<std::complex<double>>());
    } else {
      Eigen::MatrixXcd a = q.cast<std::complex<double>>() -
                           mean * Eigen::MatrixXcd::Identity(n, n);
      Eigen::MatrixXcd ns = null_space(a, null_tol);
      if (ns.cols() < static_cast<Eigen::Index>(c.size()))
        throw SpectralError(SpectralErrc::NotDiagonalizable, "defective repeated eigenvalue");
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(c.size()); ++k)
        basis.push_back(ns.col(k));
    }
    std::complex<double> value = c.size() == 1 ? raw(c[0]) : mean;
    Group g;
    if (real) {
      for (auto& v : basis) g.modes.push_back({value.real(), normalized(v)});
    } else {
      for (auto& v : basis) {
        Eigen::VectorXcd w = normalized(v);
        g.modes.push_back({value, w});
        g.modes.push_back({std::conj(value), w.conjugate()});
      }
    }
    g.re = value.real();
    g.im = real ? 0.0 : std::abs(value.imag());
    groups.push_back(std::move(g));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.re != b.re) return a.re > b.re;
    return a.im > b.im;
  });

  s.theta_.resize(n);
  s.omega_.resize(n, n);
  int col = 0;
  for (const auto& g : groups)
    for (const auto& m : g.modes) {
      s.theta_(col) = m.value;
      s.omega_.col(col) = m.vector;
      ++col;
    }
  if (col != n - 1)
    throw SpectralError(SpectralErrc::NotDiagonalizable, "eigenvalue bookkeeping mismatch");
  s.theta_(n - 1) = 0.0;
  s.omega_.col(n - 1) = Eigen::VectorXcd::Ones(n);

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.omega_);
  const auto& sv = svd.singularValues();
  s.cond_ = sv(0) / sv(sv.size() - 1);
  if (!std::isfinite(s.cond_) || s.cond_ > kMaxEigenvectorCondition) {
    std::ostringstream os;
    os << "eigenvector matrix condition number " << s.cond_ << " exceeds " << kMaxEigenvectorCondition;
    throw SpectralError(SpectralErrc::NotDiagonalizable, os.str());
  }
  s.omega_inv_ = s.omega_.fullPivLu().inverse();

  Eigen::MatrixXcd qc = q.cast<std::complex<double>>();
  for (int j = 0; j < n; ++j) {
    double res = (qc * s.omega_.col(j) - s.theta_(j) * s.omega_.col(j)).norm();
    if (res > 1e-10 * scale * n * s.omega_.col(j).norm())
      throw SpectralError(SpectralErrc::NotDiagonalizable, "eigenpair residual above tolerance");
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> psvd(q.transpose(), Eigen::ComputeFullV);
  Eigen::VectorXd pi = psvd.matrixV().col(n - 1);
  pi /= pi.sum();
  if ((pi.array() <= 0).any())
    throw SpectralError(SpectralErrc::NotIrreducible, "stationary distribution not strictly positive");
  s.pi_ = pi;

  s.trace_rate_ = -q.trace();
  double gap = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n - 1; ++j) gap = std::min(gap, -s.theta_(j).real());
  s.gap_ = gap;
  s.mixing_ = mixing_constants(s);
  return s;
}

double mixing_ratio_sup(const SpectralData& s) {
  const int n = s.size();
  const double eta = s.gap();
  const double horizon = 20.0 / eta;
  double max_im = 0;
  for (int j = 0; j < n; ++j) max_im = std::max(max_im, std::abs(s.eigenvalues()(j).imag()));
  double step = horizon / 4000.0;
  if (max_im > 0) step = std::min(step, 0.05 / max_im);
  const auto points = static_cast<long>(std::ceil(horizon / step));

  // (P_t - Pi) e^{eta t} = sum_{j<n} omega_j e^{(theta_j + eta) t} omega^{-1}_j
  const Eigen::MatrixXcd left = s.eigenvectors().leftCols(n - 1);
  const Eigen::MatrixXcd right = s.eigenvectors_inverse().topRows(n - 1);
  const Eigen::VectorXcd shifted = s.eigenvalues().head(n - 1).array() + eta;
  double sup = 0;
  for (long k = 0; k <= points; ++k) {
    double t = std::min(horizon, static_cast<double>(k) * step);
    Eigen::VectorXcd e = (shifted * t).array().exp();
    Eigen::MatrixXcd m = left * e.asDiagonal() * right;
    sup = std::max(sup, m.cwiseAbs().maxCoeff());
  }
  return sup;
}

MixingConstants mixing_constants(const SpectralData& s) {
  return {1.1 * mixing_ratio_sup(s), s.gap()};
}

}  // namespace mobnet
