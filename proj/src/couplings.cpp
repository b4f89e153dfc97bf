#include "mobnet/couplings.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <cmath>

namespace mobnet {

int ParticlePath::node_at(double t) const {
  if (t < birth) return -1;
  int node = -1;
  for (const auto& [time, where] : visits) {
    if (time > t) break;
    node = where;
  }
  return node;
}

LabelledRun simulate_labelled(const SpectralData& s, const NetworkParams& p, const State& x0,
                              double horizon, std::uint64_t seed) {
  const int n = s.size();
  p.check(n);
  if (p.total_capacity() != 0)
    throw SimulationError(SimulationErrc::InvalidParams, "labelled representation needs mu = 0");
  NetworkEngine tables(s, p);
  LabelledRun run;
  run.aggregate = Trajectory(x0, horizon);
  std::vector<RngStream> streams;
  streams.emplace_back(seed, 0);

  // (time, stream id); stream 0 is the arrival source.
  using Item = std::pair<double, std::uint64_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  auto schedule = [&](std::uint64_t id, double now) {
    auto& rng = streams[static_cast<std::size_t>(id)];
    if (id == 0) {
      if (p.total_arrival() > 0) queue.push({now + rng.exponential(p.total_arrival()), 0});
      return;
    }
    const int node = run.particles[static_cast<std::size_t>(id - 1)].visits.back().second;
    queue.push({now + rng.exponential(s.rates().exit_rate(node)), id});
  };
  auto add_particle = [&](double t, int node) {
    ParticlePath pp;
    pp.birth = t;
    pp.visits.push_back({t, node});
    run.particles.push_back(std::move(pp));
    const auto id = static_cast<std::uint64_t>(run.particles.size());
    streams.emplace_back(seed, id);
    schedule(id, t);
  };
  for (int i = 0; i < n; ++i)
    for (std::int64_t k = 0; k < x0[i]; ++k) add_particle(0.0, i);
  schedule(0, 0.0);

  while (!queue.empty()) {
    auto [t, id] = queue.top();
    if (t > horizon) break;
    queue.pop();
    auto& rng = streams[static_cast<std::size_t>(id)];
    if (id == 0) {
      int node = tables.pick_arrival(rng.uniform());
      run.aggregate.push({t, EventKind::Arrival, -1, node});
      add_particle(t, node);
      schedule(0, t);
    } else {
      auto& pp = run.particles[static_cast<std::size_t>(id - 1)];
      int from = pp.visits.back().second;
      int to = tables.pick_destination(from, rng.uniform());
      pp.visits.push_back({t, to});
      run.aggregate.push({t, EventKind::Migration, from, to});
      schedule(id, t);
    }
  }
  return run;
}

CoupledPair simulate_coupled_pair(const SpectralData& s, const NetworkParams& p, const State& upper,
                                  const State& lower, double horizon, RngStream& rng,
                                  const SimulationLimits& limits) {
  const int n = s.size();
  p.check(n);
  if (upper.size() != n || lower.size() != n)
    throw SimulationError(SimulationErrc::InvalidParams, "state dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (upper[i] < lower[i])
      throw SimulationError(SimulationErrc::PreconditionViolated, "coupled pair needs upper >= lower");
  NetworkEngine tables(s, p);
  CoupledPair out{Trajectory(upper, horizon), Trajectory(lower, horizon)};
  State xu = upper, xl = lower;
  const double lambda = p.total_arrival(), mu = p.total_capacity();
  double t = 0;
  std::uint64_t count = 0;
  while (true) {
    // Migration clocks N^k_{q_ij} with k > upper_i move neither copy, so only
    // indices up to upper_i are kept in the superposition.
    double mig = 0;
    for (int i = 0; i < n; ++i) mig += static_cast<double>(xu[i]) * s.rates().exit_rate(i);
    const double total = lambda + mu + mig;
    if (total > limits.max_total_rate)
      throw SimulationError(SimulationErrc::RateOverflow, "total event rate above the guard");
    if (total <= 0) break;
    t += rng.exponential(total);
    if (t > horizon) break;
    if (count++ >= limits.max_events) {
      out.upper.set_truncated(true);
      out.lower.set_truncated(true);
      break;
    }
    double u = rng.uniform() * total;
    if (u < lambda) {
      int i = tables.pick_arrival(u / lambda);
      xu.add(i);
      xl.add(i);
      out.upper.push({t, EventKind::Arrival, -1, i});
      out.lower.push({t, EventKind::Arrival, -1, i});
    } else if ((u -= lambda) < mu) {
      int i = -1;
      for (int k = 0; k < n; ++k) {
        if (p.capacity[static_cast<std::size_t>(k)] == 0) continue;
        i = k;
        u -= p.capacity[static_cast<std::size_t>(k)];
        if (u < 0) break;
      }
      if (xu[i] >= 1) {
        xu.remove(i);
        out.upper.push({t, EventKind::Departure, i, -1});
      }
      if (xl[i] >= 1) {
        xl.remove(i);
        out.lower.push({t, EventKind::Departure, i, -1});
      }
    } else {
      u -= mu;
      int i = -1;
      for (int k = 0; k < n; ++k) {
        if (xu[k] == 0) continue;
        i = k;
        u -= static_cast<double>(xu[k]) * s.rates().exit_rate(k);
        if (u < 0) break;
      }
      const auto k = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(xu[i]))) + 1;
      int j = tables.pick_destination(i, rng.uniform());
      xu.move(i, j);
      out.upper.push({t, EventKind::Migration, i, j});
      if (k <= xl[i]) {
        xl.move(i, j);
        out.lower.push({t, EventKind::Migration, i, j});
      }
    }
  }
  return out;
}

CheckReport check_dominance(const CoupledPair& pair) {
  CheckReport r;
  State xu = pair.upper.initial(), xl = pair.lower.initial();
  const std::int64_t gap0 = xu.total() - xl.total();
  std::int64_t gap_prev = gap0;
  std::size_t iu = 0, il = 0;
  const auto& eu = pair.upper.events();
  const auto& el = pair.lower.events();
  auto check = [&](double t) {
    ++r.epochs;
    bool ok = true;
    for (int i = 0; i < xu.size(); ++i) ok = ok && xu[i] >= xl[i];
    const std::int64_t gap = xu.total() - xl.total();
    if (gap > gap_prev || gap > gap0) ok = false;
    gap_prev = gap;
    if (!ok && r.passed) {
      r.passed = false;
      r.first_violation = t;
      r.detail = "upper copy fails to dominate or the population gap grew";
    }
  };
  check(0.0);
  while (iu < eu.size() || il < el.size()) {
    double t = std::min(iu < eu.size() ? eu[iu].time : INFINITY, il < el.size() ? el[il].time : INFINITY);
    while (iu < eu.size() && eu[iu].time == t) apply_event(xu, eu[iu++]);
    while (il < el.size() && el[il].time == t) apply_event(xl, el[il++]);
    check(t);
  }
  return r;
}

ClosedCoupling simulate_closed_coupling(const SpectralData& s, const NetworkParams& p, const State& x0,
                                        double horizon, RngStream& rng,
                                        const SimulationLimits& limits) {
  const int n = s.size();
  p.check(n);
  if (x0.size() != n) throw SimulationError(SimulationErrc::InvalidParams, "state dimension mismatch");
  NetworkEngine tables(s, p);
  ClosedCoupling out{Trajectory(x0, horizon), Trajectory(x0, horizon), {}, {}};

  struct Particle {
    int node;
    bool initial;
    bool real;
    std::size_t slot;
  };
  std::vector<Particle> particles;
  // Per node: real customers and killed (still moving) customers.
  std::vector<std::vector<std::size_t>> real(static_cast<std::size_t>(n)), killed(static_cast<std::size_t>(n));
  auto bucket = [&](const Particle& q) -> std::vector<std::size_t>& {
    return q.real ? real[static_cast<std::size_t>(q.node)] : killed[static_cast<std::size_t>(q.node)];
  };
  auto insert = [&](std::size_t id) {
    auto& b = bucket(particles[id]);
    particles[id].slot = b.size();
    b.push_back(id);
  };
  auto erase = [&](std::size_t id) {
    auto& b = bucket(particles[id]);
    std::size_t slot = particles[id].slot;
    b[slot] = b.back();
    particles[b[slot]].slot = slot;
    b.pop_back();
  };
  for (int i = 0; i < n; ++i)
    for (std::int64_t k = 0; k < x0[i]; ++k) {
      particles.push_back({i, true, true, 0});
      insert(particles.size() - 1);
    }

  const double lambda = p.total_arrival(), mu = p.total_capacity();
  double t = 0;
  std::uint64_t count = 0;
  while (true) {
    double mig = 0;
    for (int i = 0; i < n; ++i)
      mig += static_cast<double>(real[static_cast<std::size_t>(i)].size() + killed[static_cast<std::size_t>(i)].size()) *
             s.rates().exit_rate(i);
    const double total = lambda + mu + mig;
    if (total > limits.max_total_rate)
      throw SimulationError(SimulationErrc::RateOverflow, "total event rate above the guard");
    if (total <= 0) break;
    t += rng.exponential(total);
    if (t > horizon) break;
    if (count++ >= limits.max_events) {
      out.open.set_truncated(true);
      out.closed.set_truncated(true);
      break;
    }
    double u = rng.uniform() * total;
    if (u < lambda) {
      int i = tables.pick_arrival(u / lambda);
      particles.push_back({i, false, true, 0});
      insert(particles.size() - 1);
      out.open.push({t, EventKind::Arrival, -1, i});
      out.arrival_times.push_back(t);
    } else if ((u -= lambda) < mu) {
      int i = -1;
      for (int k = 0; k < n; ++k) {
        if (p.capacity[static_cast<std::size_t>(k)] == 0) continue;
        i = k;
        u -= p.capacity[static_cast<std::size_t>(k)];
        if (u < 0) break;
      }
      out.service_times.push_back(t);
      auto& b = real[static_cast<std::size_t>(i)];
      if (!b.empty()) {
        std::size_t id = b[rng.below(b.size())];
        erase(id);
        particles[id].real = false;
        insert(id);
        out.open.push({t, EventKind::Departure, i, -1});
      }
    } else {
      u -= mu;
      int i = -1;
      for (int k = 0; k < n; ++k) {
        auto c = real[static_cast<std::size_t>(k)].size() + killed[static_cast<std::size_t>(k)].size();
        if (c == 0) continue;
        i = k;
        u -= static_cast<double>(c) * s.rates().exit_rate(k);
        if (u < 0) break;
      }
      auto& br = real[static_cast<std::size_t>(i)];
      auto& bk = killed[static_cast<std::size_t>(i)];
      std::size_t pick = rng.below(br.size() + bk.size());
      std::size_t id = pick < br.size() ? br[pick] : bk[pick - br.size()];
      int j = tables.pick_destination(i, rng.uniform());
      erase(id);
      particles[id].node = j;
      insert(id);
      if (particles[id].real) out.open.push({t, EventKind::Migration, i, j});
      if (particles[id].initial) out.closed.push({t, EventKind::Migration, i, j});
    }
  }
  return out;
}

CheckReport check_sandwich(const ClosedCoupling& c) {
  CheckReport r;
  State x = c.open.initial(), u = c.closed.initial();
  std::int64_t nl = 0, nm = 0;
  std::size_t ix = 0, iu = 0, il = 0, im = 0;
  const auto& ex = c.open.events();
  const auto& eu = c.closed.events();
  auto check = [&](double t) {
    ++r.epochs;
    bool ok = true;
    for (int i = 0; i < x.size(); ++i) ok = ok && u[i] - nm <= x[i] && x[i] <= u[i] + nl;
    if (!ok && r.passed) {
      r.passed = false;
      r.first_violation = t;
      r.detail = "open network left the closed-network sandwich";
    }
  };
  check(0.0);
  while (ix < ex.size() || iu < eu.size() || il < c.arrival_times.size() || im < c.service_times.size()) {
    double t = INFINITY;
    if (ix < ex.size()) t = std::min(t, ex[ix].time);
    if (iu < eu.size()) t = std::min(t, eu[iu].time);
    if (il < c.arrival_times.size()) t = std::min(t, c.arrival_times[il]);
    if (im < c.service_times.size()) t = std::min(t, c.service_times[im]);
    while (ix < ex.size() && ex[ix].time == t) apply_event(x, ex[ix++]);
    while (iu < eu.size() && eu[iu].time == t) apply_event(u, eu[iu++]);
    while (il < c.arrival_times.size() && c.arrival_times[il] == t) ++nl, ++il;
    while (im < c.service_times.size() && c.service_times[im] == t) ++nm, ++im;
    check(t);
  }
  return r;
}

std::int64_t sample_free_walk(std::int64_t l0, double lambda, double mu, double t, RngStream& rng) {
  std::int64_t up = lambda > 0 ? std::poisson_distribution<std::int64_t>(lambda * t)(rng.engine()) : 0;
  std::int64_t down = mu > 0 ? std::poisson_distribution<std::int64_t>(mu * t)(rng.engine()) : 0;
  return l0 + up - down;
}

}  // namespace mobnet
