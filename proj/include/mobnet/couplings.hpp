#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mobnet/simulator.hpp"

namespace mobnet {

// One labelled particle: its birth time and the nodes it visits.
struct ParticlePath {
  double birth = 0;
  std::vector<std::pair<double, int>> visits;  // (entry time, node); first entry at birth
  int node_at(double t) const;                 // -1 before birth
};

struct LabelledRun {
  std::vector<ParticlePath> particles;  // initial particles first, then newborns in order
  Trajectory aggregate;
};

// Pure-migration network (all mu_i = 0) built from independent particles.
// Births use stream 0, particle k uses stream k + 1.
LabelledRun simulate_labelled(const SpectralData& s, const NetworkParams& p, const State& x0,
                              double horizon, std::uint64_t seed);

// Two open networks driven by shared Poisson sources. Requires upper >= lower.
struct CoupledPair {
  Trajectory upper;
  Trajectory lower;
};

CoupledPair simulate_coupled_pair(const SpectralData& s, const NetworkParams& p, const State& upper,
                                  const State& lower, double horizon, RngStream& rng,
                                  const SimulationLimits& limits = {});

// X^x >= X^y componentwise and L^x - L^y nonincreasing at every epoch.
CheckReport check_dominance(const CoupledPair& pair);

// Open network X together with the closed network U of its initial particles.
struct ClosedCoupling {
  Trajectory open;    // X
  Trajectory closed;  // U, migrations only
  std::vector<double> arrival_times;  // jump times of N_lambda
  std::vector<double> service_times;  // jump times of N_mu
};

ClosedCoupling simulate_closed_coupling(const SpectralData& s, const NetworkParams& p, const State& x0,
                                        double horizon, RngStream& rng,
                                        const SimulationLimits& limits = {});

// U_i - N_mu <= X_i <= U_i + N_lambda at every epoch.
CheckReport check_sandwich(const ClosedCoupling& c);

// Total population of the free M/M/1 walk L(0) + N_lambda(t) - N_mu(t).
std::int64_t sample_free_walk(std::int64_t l0, double lambda, double mu, double t, RngStream& rng);

}  // namespace mobnet
