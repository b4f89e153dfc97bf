#pragma once

#include <cstdint>
#include <vector>

#include "mobnet/rng.hpp"
#include "mobnet/spectral.hpp"
#include "mobnet/state.hpp"

namespace mobnet {

struct SimulationLimits {
  std::uint64_t max_events = 100'000'000;
  double max_total_rate = 1e12;
};

struct RunStatus {
  double end_time = 0;
  std::uint64_t events = 0;
  bool truncated = false;  // event-count guard hit
  bool stopped = false;    // sink asked to stop
};

// Exact jump-chain sampler for the open network (Gillespie direct method).
class NetworkEngine {
 public:
  NetworkEngine(const SpectralData& s, const NetworkParams& p);

  int size() const { return n_; }

  // Advances x in place from time 0 up to the horizon. The sink is called as
  // sink(event, state_after) and returns false to stop early.
  template <class Sink>
  RunStatus run(State& x, double horizon, RngStream& rng, Sink&& sink,
                const SimulationLimits& limits = {}) const;

  int pick_destination(int i, double u) const;
  int pick_arrival(double u) const;

 private:
  int n_;
  std::vector<double> lambda_, mu_, exit_;
  std::vector<double> arrival_cum_;
  std::vector<double> dest_cum_;  // row i: cumulative q_ij / exit_i
  double lambda_total_ = 0;
};

Trajectory simulate(const SpectralData& s, const NetworkParams& p, const State& x0, double horizon,
                    RngStream& rng, const SimulationLimits& limits = {});

// Triple process (x, y, z): x real customers, y killed customers, z virtual
// customers created by service events at empty nodes.
enum class TripleKind : std::uint8_t { Birth, Kill, Virtual, MoveX, MoveY, MoveZ };
const char* to_string(TripleKind k);

struct TripleEvent {
  double time;
  TripleKind kind;
  std::int32_t from;
  std::int32_t to;
};

struct TripleState {
  State x, y, z;
  std::int64_t n_lambda = 0;
  std::int64_t n_mu = 0;
};

void apply_triple(TripleState& s, const TripleEvent& e);

class TriplePath {
 public:
  TriplePath() = default;
  TriplePath(const State& x0, double horizon);

  void push(const TripleEvent& e) { events_.push_back(e); }
  void set_truncated(bool t) { truncated_ = t; }
  const TripleState& initial() const { return initial_; }
  const std::vector<TripleEvent>& events() const { return events_; }
  double horizon() const { return horizon_; }
  bool truncated() const { return truncated_; }

  template <class F>
  void replay(F&& f) const {
    TripleState s = initial_;
    f(0.0, static_cast<const TripleEvent*>(nullptr), static_cast<const TripleState&>(s));
    for (const auto& e : events_) {
      apply_triple(s, e);
      f(e.time, &e, static_cast<const TripleState&>(s));
    }
  }

  void validate() const;
  Trajectory project_x() const;
  Trajectory project_x_plus_y() const;
  Trajectory project_y_plus_z() const;
  TripleState final_state() const;

  // time,event_kind,from_node,to_node,x_..,y_..,z_..,N_lambda,N_mu
  void write_csv(std::ostream& os) const;

 private:
  TripleState initial_;
  std::vector<TripleEvent> events_;
  double horizon_ = 0;
  bool truncated_ = false;
};

TriplePath simulate_triple(const SpectralData& s, const NetworkParams& p, const State& x0,
                           double horizon, RngStream& rng, const SimulationLimits& limits = {});

struct CheckReport {
  bool passed = true;
  std::uint64_t epochs = 0;
  std::optional<double> first_violation;
  std::string detail;
};

// L = L(0) + N_lambda - N_mu on [0, T_0] and L >= L(0) + N_lambda - N_mu always.
// Also checks the pathwise identities linking X, X+Y, Y+Z and the counters.
CheckReport check_mm1_embedding(const TriplePath& path);

}  // namespace mobnet

#include "mobnet/simulator_impl.hpp"
