#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mobnet/config.hpp"

namespace mobnet {

struct CheckLine {
  std::string name;
  bool passed;
  double measured;  // worst error or violation count
  double limit;
  std::string detail;
};

struct SuiteReport {
  std::vector<CheckLine> checks;
  bool passed() const;
};

// Random irreducible generator: a directed cycle plus random extra edges,
// rates uniform on [0.2, 2].
Eigen::MatrixXd random_rate_matrix(int n, std::mt19937_64& g, double density = 0.5);

// Exact algebraic identities on one (Q, lambda, mu): psi scaling, chart
// Jacobian and inverse, the M/M/1 closed form of h_v on constant v, group law,
// eigen-residuals, flow composition and the mixing bound.
SuiteReport algebraic_identities(const SpectralData& s, const NetworkParams& p, std::uint64_t seed,
                                 int samples = 100);

// Pathwise coupling checks with `paths` runs each: triple decomposition and
// M/M/1 embedding, closed-system sandwich, monotone pair.
SuiteReport pathwise_couplings(const SpectralData& s, const NetworkParams& p, long paths, double horizon,
                               std::uint64_t seed, int workers = 0);

struct RunResult {
  bool hard_failure = false;  // exact identities; drives the exit status
  bool soft_failure = false;  // statistical verdicts
  std::filesystem::path directory;
  std::vector<std::string> files;
  int exit_code() const { return hard_failure ? 1 : 0; }
};

// Writes manifest.json, summary.json and per-replica CSVs into c.output.
RunResult run_experiment(const ExperimentConfig& c);

// Derived quantities without simulating.
std::string describe(const ExperimentConfig& c);

// Re-parses the config echoed in a manifest.
ExperimentConfig config_from_manifest(const std::string& manifest_text);

std::string code_version();

}  // namespace mobnet
