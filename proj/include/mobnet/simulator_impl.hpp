#pragma once

// Template body of NetworkEngine::run; included from simulator.hpp.

#include <sstream>

namespace mobnet {

template <class Sink>
RunStatus NetworkEngine::run(State& x, double horizon, RngStream& rng, Sink&& sink,
                             const SimulationLimits& limits) const {
  RunStatus st;
  auto recompute = [&](double& dep, double& mig) {
    dep = 0;
    mig = 0;
    for (int i = 0; i < n_; ++i) {
      if (x[i] > 0) dep += mu_[static_cast<std::size_t>(i)];
      mig += static_cast<double>(x[i]) * exit_[static_cast<std::size_t>(i)];
    }
  };
  double dep = 0, mig = 0;
  recompute(dep, mig);
  double t = 0;
  while (true) {
    if ((st.events & 4095u) == 4095u) recompute(dep, mig);
    const double total = lambda_total_ + dep + mig;
    if (total > limits.max_total_rate || !std::isfinite(total)) {
      std::ostringstream os;
      os << "total event rate " << total << " exceeds " << limits.max_total_rate;
      throw SimulationError(SimulationErrc::RateOverflow, os.str());
    }
    if (total <= 0) {
      st.end_time = horizon;
      return st;
    }
    t += rng.exponential(total);
    if (t > horizon) {
      st.end_time = horizon;
      return st;
    }
    if (st.events >= limits.max_events) {
      st.truncated = true;
      st.end_time = t;
      return st;
    }
    double u = rng.uniform() * total;
    Event e{t, EventKind::Arrival, -1, -1};
    if (u < lambda_total_) {
      int i = pick_arrival(u / lambda_total_);
      x.add(i);
      if (x[i] == 1) dep += mu_[static_cast<std::size_t>(i)];
      mig += exit_[static_cast<std::size_t>(i)];
      e.to = i;
    } else if ((u -= lambda_total_) < dep) {
      int i = -1;
      for (int k = 0; k < n_; ++k) {
        if (x[k] == 0 || mu_[static_cast<std::size_t>(k)] == 0) continue;
        i = k;
        u -= mu_[static_cast<std::size_t>(k)];
        if (u < 0) break;
      }
      if (i < 0) throw SimulationError(SimulationErrc::InvalidParams, "departure rate bookkeeping failed");
      x.remove(i);
      if (x[i] == 0) dep -= mu_[static_cast<std::size_t>(i)];
      mig -= exit_[static_cast<std::size_t>(i)];
      e.kind = EventKind::Departure;
      e.from = i;
    } else {
      u -= dep;
      int i = -1;
      for (int k = 0; k < n_; ++k) {
        if (x[k] == 0 || exit_[static_cast<std::size_t>(k)] == 0) continue;
        i = k;
        u -= static_cast<double>(x[k]) * exit_[static_cast<std::size_t>(k)];
        if (u < 0) break;
      }
      if (i < 0) throw SimulationError(SimulationErrc::InvalidParams, "migration rate bookkeeping failed");
      int j = pick_destination(i, rng.uniform());
      x.move(i, j);
      if (x[i] == 0) dep -= mu_[static_cast<std::size_t>(i)];
      if (x[j] == 1) dep += mu_[static_cast<std::size_t>(j)];
      mig += exit_[static_cast<std::size_t>(j)] - exit_[static_cast<std::size_t>(i)];
      e.kind = EventKind::Migration;
      e.from = i;
      e.to = j;
    }
    ++st.events;
    if (!sink(e, static_cast<const State&>(x))) {
      st.stopped = true;
      st.end_time = t;
      return st;
    }
  }
}

}  // namespace mobnet
