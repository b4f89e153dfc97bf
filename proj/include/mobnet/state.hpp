#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mobnet/error.hpp"

namespace mobnet {

// Occupancy vector x in N^n.
class State {
 public:
  State() = default;
  explicit State(std::vector<std::int64_t> counts);
  static State zeros(int n) { return State(std::vector<std::int64_t>(static_cast<std::size_t>(n), 0)); }

  int size() const { return static_cast<int>(c_.size()); }
  std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::int64_t total() const { return total_; }
  const std::vector<std::int64_t>& counts() const { return c_; }
  bool any_empty() const;

  void add(int i) {
    ++c_[static_cast<std::size_t>(i)];
    ++total_;
  }
  void remove(int i);
  void move(int from, int to);

  bool operator==(const State& o) const { return c_ == o.c_; }

 private:
  std::vector<std::int64_t> c_;
  std::int64_t total_ = 0;
};

// chi(x) = x/|x|, with e_1 for the empty network.
Eigen::VectorXd composition(const State& x);

// Throws InvalidSimplexPoint unless entries are >= 0 and sum to one.
void check_simplex_point(const Eigen::VectorXd& rho, double tol = 1e-9);

// H(rho, pi) = sum rho_i log(rho_i / pi_i) with 0 log 0 = 0.
double relative_entropy(const Eigen::VectorXd& rho, const Eigen::VectorXd& pi);

double sup_norm_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct EntropyConstants {
  double c1;            // C_1 ||rho - pi||^2 <= H(rho, pi)
  double c2;            // H(rho, pi) <= C_2 ||rho - pi||^2
  double eps0_norm;     // ||chi - pi|| <= eps0_norm keeps chi away from the boundary
  double eps0_entropy;  // H <= eps0_entropy implies ||chi - pi|| <= eps0_norm
  double grid_step;     // lattice step actually used for certification
  long grid_points;
};

// C_1 = 1/2, C_2 = n / min pi_i, certified on a simplex lattice.
EntropyConstants entropy_constants(const Eigen::VectorXd& pi);

// Enumerates the lattice {k/K : k in N^n, |k| = K}; returns the number of points.
long for_each_lattice_point(int n, int k_total, const std::function<void(const Eigen::VectorXd&)>& f);

// Arrival rates lambda_i and service capacities mu_i.
struct NetworkParams {
  std::vector<double> arrival;
  std::vector<double> capacity;

  int size() const { return static_cast<int>(arrival.size()); }
  double total_arrival() const;
  double total_capacity() const;
  void check(int n) const;  // throws SimulationError::InvalidParams
};

enum class Regime { Subcritical, Critical, Supercritical };
Regime regime_of(const NetworkParams& p);
const char* to_string(Regime r);

enum class EventKind : std::uint8_t { Arrival, Departure, Migration };
const char* to_string(EventKind k);

// Node indices are 0-based; -1 marks an unused endpoint.
struct Event {
  double time;
  EventKind kind;
  std::int32_t from;
  std::int32_t to;
};

void apply_event(State& x, const Event& e);

// Piecewise-constant path stored as its initial state and the jump list.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(State initial, double horizon) : initial_(std::move(initial)), horizon_(horizon) {}

  void push(const Event& e) { events_.push_back(e); }
  void reserve(std::size_t k) { events_.reserve(k); }
  void set_truncated(bool t) { truncated_ = t; }
  void set_horizon(double h) { horizon_ = h; }

  const State& initial() const { return initial_; }
  const std::vector<Event>& events() const { return events_; }
  double horizon() const { return horizon_; }
  bool truncated() const { return truncated_; }
  int size() const { return initial_.size(); }

  // Calls f(time, event*, state) for time 0 (event == nullptr) and each jump.
  template <class F>
  void replay(F&& f) const {
    State x = initial_;
    f(0.0, static_cast<const Event*>(nullptr), static_cast<const State&>(x));
    for (const auto& e : events_) {
      apply_event(x, e);
      f(e.time, &e, static_cast<const State&>(x));
    }
  }

  State state_at(double t) const;
  State final_state() const;

  // Strictly increasing times, events within the horizon, no departure from an empty node.
  void validate() const;

  // time,event_kind,from_node,to_node,x_1..x_n with 1-based nodes, empty when unused.
  void write_csv(std::ostream& os) const;

 private:
  State initial_;
  std::vector<Event> events_;
  double horizon_ = 0;
  bool truncated_ = false;
};

struct StoppingTimes {
  std::optional<double> enter_ball;    // first t with ||chi - pi|| <= eps
  std::optional<double> leave_ball;    // first t with ||chi - pi|| > eps
  std::optional<double> entropy_exit;  // first t with H(chi, pi) > eps
  std::optional<double> empty_node;    // first t with some x_i = 0
};

// Online detector evaluated at time 0 and at jump epochs.
class StoppingTimeDetector {
 public:
  StoppingTimeDetector(Eigen::VectorXd pi, double eps) : pi_(std::move(pi)), eps_(eps) {}
  void observe(double t, const State& x);
  const StoppingTimes& result() const { return r_; }
  bool complete() const { return r_.enter_ball && r_.leave_ball && r_.entropy_exit && r_.empty_node; }

 private:
  Eigen::VectorXd pi_;
  double eps_;
  StoppingTimes r_;
};

StoppingTimes stopping_times(const Trajectory& path, const Eigen::VectorXd& pi, double eps);

}  // namespace mobnet
