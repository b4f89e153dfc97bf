#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mobnet/scaling.hpp"

namespace mobnet {

enum class ExperimentKind {
  Simulate,
  Kelly,
  Hitting,
  Fluid,
  Drift,
  Trapping,
  SubcriticalExit,
  Ergodicity,
  MartingaleCheck,
  DeviationBound,
  IdentitySuite,
};
const char* to_string(ExperimentKind k);

// One experiment. Files are JSON with // and /* */ comments; unknown keys are errors.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Simulate;
  std::vector<std::vector<std::optional<double>>> rates;  // row-major Q, null diagonal allowed
  std::vector<double> arrival;
  std::vector<double> capacity;
  ScalingPlan plan;
  std::optional<Regime> regime;      // fluid runs
  std::vector<double> alphas{0.5};
  std::vector<double> ells{0.0};
  std::vector<double> times{0.0, 0.25, 0.5, 1.0};
  double eps = 0.02;
  double delta = 0.01;
  std::vector<std::int64_t> initial;  // simulate, drift, martingale-check, deviation-bound
  double t_max = 1.0;                 // simulate, drift, deviation-bound horizon
  long paths = 100;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string output = "out";
};

// Parse and validate. Throws ConfigError(ConfigInvalid) with the offending field,
// or ConfigError(SpectralRejection) when Q fails validation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);

// Canonical JSON text; parse_config(to_json_text(c)) is equivalent to c.
std::string to_json_text(const ExperimentConfig& c);

bool equivalent(const ExperimentConfig& a, const ExperimentConfig& b);

SpectralData spectral_of(const ExperimentConfig& c);
NetworkParams params_of(const ExperimentConfig& c);
State initial_of(const ExperimentConfig& c);  // configured state, or 5 per node

}  // namespace mobnet
