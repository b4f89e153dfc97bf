#include "mobnet/simulator.hpp"

#include <algorithm>
#include <ostream>

namespace mobnet {

NetworkEngine::NetworkEngine(const SpectralData& s, const NetworkParams& p) : n_(s.size()) {
  p.check(n_);
  lambda_ = p.arrival;
  mu_ = p.capacity;
  exit_.resize(static_cast<std::size_t>(n_));
  dest_cum_.assign(static_cast<std::size_t>(n_ * n_), 0.0);
  for (int i = 0; i < n_; ++i) {
    exit_[static_cast<std::size_t>(i)] = s.rates().exit_rate(i);
    double acc = 0;
    for (int j = 0; j < n_; ++j) {
      if (j != i) acc += s.rates().rate(i, j);
      dest_cum_[static_cast<std::size_t>(i * n_ + j)] = acc;
    }
    for (int j = 0; j < n_; ++j)
      if (acc > 0) dest_cum_[static_cast<std::size_t>(i * n_ + j)] /= acc;
  }
  double acc = 0;
  for (double l : lambda_) {
    acc += l;
    arrival_cum_.push_back(acc);
  }
  lambda_total_ = acc;
  if (acc > 0)
    for (double& c : arrival_cum_) c /= acc;
}

int NetworkEngine::pick_destination(int i, double u) const {
  const double* row = dest_cum_.data() + static_cast<std::ptrdiff_t>(i) * n_;
  int last = -1;
  for (int j = 0; j < n_; ++j) {
    if (j == i || (j > 0 ? row[j] == row[j - 1] : row[j] == 0)) continue;
    last = j;
    if (u < row[j]) return j;
  }
  return last;
}

int NetworkEngine::pick_arrival(double u) const {
  int last = -1;
  for (int i = 0; i < n_; ++i) {
    if (lambda_[static_cast<std::size_t>(i)] == 0) continue;
    last = i;
    if (u < arrival_cum_[static_cast<std::size_t>(i)]) return i;
  }
  return last;
}

Trajectory simulate(const SpectralData& s, const NetworkParams& p, const State& x0, double horizon,
                    RngStream& rng, const SimulationLimits& limits) {
  if (x0.size() != s.size()) throw SimulationError(SimulationErrc::InvalidParams, "state dimension mismatch");
  NetworkEngine engine(s, p);
  Trajectory path(x0, horizon);
  State x = x0;
  RunStatus st = engine.run(x, horizon, rng, [&](const Event& e, const State&) {
    path.push(e);
    return true;
  }, limits);
  path.set_truncated(st.truncated);
  return path;
}

// ---------------------------------------------------------------- triple process

const char* to_string(TripleKind k) {
  switch (k) {
    case TripleKind::Birth: return "birth";
    case TripleKind::Kill: return "kill";
    case TripleKind::Virtual: return "virtual";
    case TripleKind::MoveX: return "move_x";
    case TripleKind::MoveY: return "move_y";
    case TripleKind::MoveZ: return "move_z";
  }
  return "?";
}

void apply_triple(TripleState& s, const TripleEvent& e) {
  switch (e.kind) {
    case TripleKind::Birth:
      s.x.add(e.to);
      ++s.n_lambda;
      break;
    case TripleKind::Kill:
      if (s.x[e.from] < 1) throw SimulationError(SimulationErrc::InvalidTrajectory, "kill at an empty node");
      s.x.remove(e.from);
      s.y.add(e.from);
      ++s.n_mu;
      break;
    case TripleKind::Virtual:
      if (s.x[e.from] != 0)
        throw SimulationError(SimulationErrc::InvalidTrajectory, "virtual customer at an occupied node");
      s.z.add(e.from);
      ++s.n_mu;
      break;
    case TripleKind::MoveX: s.x.move(e.from, e.to); break;
    case TripleKind::MoveY: s.y.move(e.from, e.to); break;
    case TripleKind::MoveZ: s.z.move(e.from, e.to); break;
  }
}

TriplePath::TriplePath(const State& x0, double horizon) : horizon_(horizon) {
  initial_.x = x0;
  initial_.y = State::zeros(x0.size());
  initial_.z = State::zeros(x0.size());
}

void TriplePath::validate() const {
  double last = -1;
  try {
    replay([&](double t, const TripleEvent* e, const TripleState&) {
      if (!e) return;
      if (!(t > last) || t > horizon_)
        throw SimulationError(SimulationErrc::InvalidTrajectory, "event times must increase within the horizon");
      last = t;
    });
  } catch (const StateError& err) {
    throw SimulationError(SimulationErrc::InvalidTrajectory, err.what());
  }
}

TripleState TriplePath::final_state() const {
  TripleState s = initial_;
  for (const auto& e : events_) apply_triple(s, e);
  return s;
}

Trajectory TriplePath::project_x() const {
  Trajectory t(initial_.x, horizon_);
  for (const auto& e : events_) {
    switch (e.kind) {
      case TripleKind::Birth: t.push({e.time, EventKind::Arrival, -1, e.to}); break;
      case TripleKind::Kill: t.push({e.time, EventKind::Departure, e.from, -1}); break;
      case TripleKind::MoveX: t.push({e.time, EventKind::Migration, e.from, e.to}); break;
      default: break;
    }
  }
  t.set_truncated(truncated_);
  return t;
}

Trajectory TriplePath::project_x_plus_y() const {
  Trajectory t(initial_.x, horizon_);
  for (const auto& e : events_) {
    switch (e.kind) {
      case TripleKind::Birth: t.push({e.time, EventKind::Arrival, -1, e.to}); break;
      case TripleKind::MoveX:
      case TripleKind::MoveY: t.push({e.time, EventKind::Migration, e.from, e.to}); break;
      default: break;
    }
  }
  t.set_truncated(truncated_);
  return t;
}

Trajectory TriplePath::project_y_plus_z() const {
  Trajectory t(State::zeros(initial_.x.size()), horizon_);
  for (const auto& e : events_) {
    switch (e.kind) {
      case TripleKind::Kill:
      case TripleKind::Virtual: t.push({e.time, EventKind::Arrival, -1, e.from}); break;
      case TripleKind::MoveY:
      case TripleKind::MoveZ: t.push({e.time, EventKind::Migration, e.from, e.to}); break;
      default: break;
    }
  }
  t.set_truncated(truncated_);
  return t;
}

void TriplePath::write_csv(std::ostream& os) const {
  const int n = initial_.x.size();
  os << "time,event_kind,from_node,to_node";
  for (const char* c : {"x", "y", "z"})
    for (int i = 1; i <= n; ++i) os << ',' << c << '_' << i;
  os << ",N_lambda,N_mu\n";
  os.precision(17);
  replay([&](double t, const TripleEvent* e, const TripleState& s) {
    os << t << ',' << (e ? to_string(e->kind) : "initial") << ',';
    if (e && e->from >= 0) os << e->from + 1;
    os << ',';
    if (e && e->to >= 0) os << e->to + 1;
    for (const State* v : {&s.x, &s.y, &s.z})
      for (int i = 0; i < n; ++i) os << ',' << (*v)[i];
    os << ',' << s.n_lambda << ',' << s.n_mu << '\n';
  });
}

TriplePath simulate_triple(const SpectralData& s, const NetworkParams& p, const State& x0,
                           double horizon, RngStream& rng, const SimulationLimits& limits) {
  const int n = s.size();
  p.check(n);
  if (x0.size() != n) throw SimulationError(SimulationErrc::InvalidParams, "state dimension mismatch");
  NetworkEngine tables(s, p);
  TriplePath path(x0, horizon);
  TripleState st = path.initial();
  const double lambda = p.total_arrival(), mu = p.total_capacity();
  std::vector<double> exit(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) exit[static_cast<std::size_t>(i)] = s.rates().exit_rate(i);
  double t = 0;
  std::uint64_t count = 0;
  while (true) {
    double mig = 0;
    for (int i = 0; i < n; ++i)
      mig += static_cast<double>(st.x[i] + st.y[i] + st.z[i]) * exit[static_cast<std::size_t>(i)];
    const double total = lambda + mu + mig;
    if (total > limits.max_total_rate)
      throw SimulationError(SimulationErrc::RateOverflow, "total event rate above the guard");
    if (total <= 0) break;
    t += rng.exponential(total);
    if (t > horizon) break;
    if (count >= limits.max_events) {
      path.set_truncated(true);
      break;
    }
    double u = rng.uniform() * total;
    TripleEvent e{t, TripleKind::Birth, -1, -1};
    if (u < lambda) {
      e.to = tables.pick_arrival(u / lambda);
    } else if ((u -= lambda) < mu) {
      int i = -1;
      for (int k = 0; k < n; ++k) {
        if (p.capacity[static_cast<std::size_t>(k)] == 0) continue;
        i = k;
        u -= p.capacity[static_cast<std::size_t>(k)];
        if (u < 0) break;
      }
      e.kind = st.x[i] >= 1 ? TripleKind::Kill : TripleKind::Virtual;
      e.from = i;
    } else {
      u -= mu;
      int i = -1;
      double w = 0;
      for (int k = 0; k < n; ++k) {
        w = static_cast<double>(st.x[k] + st.y[k] + st.z[k]) * exit[static_cast<std::size_t>(k)];
        if (w == 0) continue;
        i = k;
        u -= w;
        if (u < 0) break;
      }
      // Choose the component in proportion to its count at node i.
      const double ex = exit[static_cast<std::size_t>(i)];
      double v = rng.uniform() * static_cast<double>(st.x[i] + st.y[i] + st.z[i]) * ex;
      if (v < static_cast<double>(st.x[i]) * ex)
        e.kind = TripleKind::MoveX;
      else if (v < static_cast<double>(st.x[i] + st.y[i]) * ex)
        e.kind = TripleKind::MoveY;
      else
        e.kind = TripleKind::MoveZ;
      e.from = i;
      e.to = tables.pick_destination(i, rng.uniform());
    }
    apply_triple(st, e);
    path.push(e);
    ++count;
  }
  return path;
}

CheckReport check_mm1_embedding(const TriplePath& path) {
  CheckReport r;
  const std::int64_t l0 = path.initial().x.total();
  bool before_t0 = !path.initial().x.any_empty();
  auto fail = [&](double t, const std::string& why) {
    if (r.passed) {
      r.passed = false;
      r.first_violation = t;
      r.detail = why;
    }
  };
  std::int64_t z_prev = 0;
  path.replay([&](double t, const TripleEvent* e, const TripleState& s) {
    ++r.epochs;
    const std::int64_t l = s.x.total();
    const std::int64_t walk = l0 + s.n_lambda - s.n_mu;
    if (before_t0 && l != walk) fail(t, "L differs from the M/M/1 walk before T_0");
    if (l < walk) fail(t, "L below the M/M/1 walk");
    const std::int64_t xy = s.x.total() + s.y.total();
    const std::int64_t yz = s.y.total() + s.z.total();
    if (xy - l0 != s.n_lambda) fail(t, "|X+Y| - |x0| differs from N_lambda");
    if (yz != s.n_mu) fail(t, "|Y+Z| differs from N_mu");
    if (l != xy - yz + s.z.total()) fail(t, "X != (X+Y) - (Y+Z) + Z");
    if (s.z.total() > z_prev && !(e && e->kind == TripleKind::Virtual && s.x[e->from] == 0))
      fail(t, "|Z| increased away from an empty node");
    if (s.z.total() < z_prev) fail(t, "|Z| decreased");
    z_prev = s.z.total();
    if (s.x.any_empty()) before_t0 = false;
  });
  return r;
}

}  // namespace mobnet
