#include "mobnet/state.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace mobnet {

State::State(std::vector<std::int64_t> counts) : c_(std::move(counts)) {
  for (auto v : c_) {
    if (v < 0) throw StateError(StateErrc::InvalidState, "occupancy must be nonnegative");
    total_ += v;
  }
}

bool State::any_empty() const {
  return std::any_of(c_.begin(), c_.end(), [](std::int64_t v) { return v == 0; });
}

void State::remove(int i) {
  auto& v = c_[static_cast<std::size_t>(i)];
  if (v <= 0) throw StateError(StateErrc::InvalidState, "removal from an empty node");
  --v;
  --total_;
}

void State::move(int from, int to) {
  auto& v = c_[static_cast<std::size_t>(from)];
  if (v <= 0) throw StateError(StateErrc::InvalidState, "migration from an empty node");
  --v;
  ++c_[static_cast<std::size_t>(to)];
}

Eigen::VectorXd composition(const State& x) {
  const int n = x.size();
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(n);
  if (x.total() == 0) {
    chi(0) = 1.0;
    return chi;
  }
  const double l = static_cast<double>(x.total());
  for (int i = 0; i < n; ++i) chi(i) = static_cast<double>(x[i]) / l;
  return chi;
}

void check_simplex_point(const Eigen::VectorXd& rho, double tol) {
  if (rho.size() == 0 || (rho.array() < 0).any() || !rho.allFinite() ||
      std::abs(rho.sum() - 1.0) > tol)
    throw StateError(StateErrc::InvalidSimplexPoint, "not a point of the probability simplex");
}

double relative_entropy(const Eigen::VectorXd& rho, const Eigen::VectorXd& pi) {
  if (rho.size() != pi.size())
    throw StateError(StateErrc::InvalidSimplexPoint, "dimension mismatch");
  double h = 0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho(i) <= 0) continue;
    if (pi(i) <= 0)
      throw StateError(StateErrc::DegenerateReference, "reference vanishes where rho is positive");
    h += rho(i) * std::log(rho(i) / pi(i));
  }
  return h;
}

double sup_norm_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

long for_each_lattice_point(int n, int k_total, const std::function<void(const Eigen::VectorXd&)>& f) {
  std::vector<int> k(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd p(n);
  long count = 0;
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n - 1) {
      k[static_cast<std::size_t>(pos)] = left;
      for (int i = 0; i < n; ++i) p(i) = static_cast<double>(k[static_cast<std::size_t>(i)]) / k_total;
      f(p);
      ++count;
      return;
    }
    for (int v = 0; v <= left; ++v) {
      k[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, k_total);
  return count;
}

namespace {

double binomial(int a, int b) {
  double r = 1;
  for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

}  // namespace

EntropyConstants entropy_constants(const Eigen::VectorXd& pi) {
  check_simplex_point(pi);
  if ((pi.array() <= 0).any())
    throw StateError(StateErrc::DegenerateReference, "stationary law must be strictly positive");
  const int n = static_cast<int>(pi.size());
  EntropyConstants c{};
  c.c1 = 0.5;
  c.c2 = n / pi.minCoeff();
  c.eps0_norm = pi.minCoeff() / 2.0;
  c.eps0_entropy = c.c1 * c.eps0_norm * c.eps0_norm;

  // Step 0.01 unless the lattice would exceed a few million points.
  int k = 100;
  while (k > 4 && binomial(k + n - 1, n - 1) > 5e6) --k;
  c.grid_step = 1.0 / k;
  bool ok = true;
  c.grid_points = for_each_lattice_point(n, k, [&](const Eigen::VectorXd& rho) {
    double d = sup_norm_distance(rho, pi);
    double h = relative_entropy(rho, pi);
    if (c.c1 * d * d > h + 1e-12 || h > c.c2 * d * d + 1e-12) ok = false;
  });
  if (!ok) throw StateError(StateErrc::CertificationFailed, "entropy constants failed on the lattice");
  return c;
}

double NetworkParams::total_arrival() const {
  double s = 0;
  for (double v : arrival) s += v;
  return s;
}

double NetworkParams::total_capacity() const {
  double s = 0;
  for (double v : capacity) s += v;
  return s;
}

void NetworkParams::check(int n) const {
  if (static_cast<int>(arrival.size()) != n || static_cast<int>(capacity.size()) != n)
    throw SimulationError(SimulationErrc::InvalidParams, "rate vectors must have length n");
  for (std::size_t i = 0; i < arrival.size(); ++i)
    if (!(arrival[i] >= 0) || !(capacity[i] >= 0) || !std::isfinite(arrival[i]) ||
        !std::isfinite(capacity[i]))
      throw SimulationError(SimulationErrc::InvalidParams, "rates must be finite and nonnegative");
}

Regime regime_of(const NetworkParams& p) {
  const double l = p.total_arrival(), m = p.total_capacity();
  if (std::abs(l - m) <= 1e-12 * std::max(1.0, std::max(l, m))) return Regime::Critical;
  return l < m ? Regime::Subcritical : Regime::Supercritical;
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
  }
  return "?";
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Departure: return "departure";
    case EventKind::Migration: return "migration";
  }
  return "?";
}

void apply_event(State& x, const Event& e) {
  switch (e.kind) {
    case EventKind::Arrival: x.add(e.to); break;
    case EventKind::Departure: x.remove(e.from); break;
    case EventKind::Migration: x.move(e.from, e.to); break;
  }
}

State Trajectory::state_at(double t) const {
  State x = initial_;
  for (const auto& e : events_) {
    if (e.time > t) break;
    apply_event(x, e);
  }
  return x;
}

State Trajectory::final_state() const {
  State x = initial_;
  for (const auto& e : events_) apply_event(x, e);
  return x;
}

void Trajectory::validate() const {
  State x = initial_;
  double last = 0;
  bool first = true;
  const int n = initial_.size();
  for (const auto& e : events_) {
    if (!(e.time > last) && !(first && e.time > 0))
      throw SimulationError(SimulationErrc::InvalidTrajectory, "event times must increase strictly");
    if (e.time > horizon_)
      throw SimulationError(SimulationErrc::InvalidTrajectory, "event after the horizon");
    auto node_ok = [n](int i) { return i >= 0 && i < n; };
    switch (e.kind) {
      case EventKind::Arrival:
        if (!node_ok(e.to)) throw SimulationError(SimulationErrc::InvalidTrajectory, "bad arrival node");
        break;
      case EventKind::Departure:
        if (!node_ok(e.from) || x[e.from] < 1)
          throw SimulationError(SimulationErrc::InvalidTrajectory, "departure from an empty node");
        break;
      case EventKind::Migration:
        if (!node_ok(e.from) || !node_ok(e.to) || e.from == e.to || x[e.from] < 1)
          throw SimulationError(SimulationErrc::InvalidTrajectory, "invalid migration");
        break;
    }
    apply_event(x, e);
    last = e.time;
    first = false;
  }
}

void Trajectory::write_csv(std::ostream& os) const {
  const int n = initial_.size();
  os << "time,event_kind,from_node,to_node";
  for (int i = 1; i <= n; ++i) os << ",x_" << i;
  os << '\n';
  os.precision(17);
  replay([&](double t, const Event* e, const State& x) {
    os << t << ',' << (e ? to_string(e->kind) : "initial") << ',';
    if (e && e->from >= 0) os << e->from + 1;
    os << ',';
    if (e && e->to >= 0) os << e->to + 1;
    for (int i = 0; i < n; ++i) os << ',' << x[i];
    os << '\n';
  });
}

void StoppingTimeDetector::observe(double t, const State& x) {
  if (!r_.empty_node && x.any_empty()) r_.empty_node = t;
  if (r_.enter_ball && r_.leave_ball && r_.entropy_exit) return;
  Eigen::VectorXd chi = composition(x);
  double d = sup_norm_distance(chi, pi_);
  if (!r_.enter_ball && d <= eps_) r_.enter_ball = t;
  if (!r_.leave_ball && d > eps_) r_.leave_ball = t;
  if (!r_.entropy_exit && relative_entropy(chi, pi_) > eps_) r_.entropy_exit = t;
}

StoppingTimes stopping_times(const Trajectory& path, const Eigen::VectorXd& pi, double eps) {
  StoppingTimeDetector det(pi, eps);
  path.replay([&](double t, const Event*, const State& x) { det.observe(t, x); });
  return det.result();
}

}  // namespace mobnet
