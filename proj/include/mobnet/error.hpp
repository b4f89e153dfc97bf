#pragma once

#include <stdexcept>
#include <string>

namespace mobnet {

// Exceptions carry a module-specific kind so callers can branch without parsing text.
template <class Kind>
class Error : public std::runtime_error {
 public:
  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class SpectralErrc {
  InvalidShape,
  InvalidRate,
  RowSumViolation,
  NotIrreducible,
  NotDiagonalizable,
  ImaginaryResidue,
};

enum class StateErrc {
  InvalidState,
  InvalidSimplexPoint,
  DegenerateReference,
  CertificationFailed,
};

enum class SimulationErrc {
  InvalidParams,
  RateOverflow,
  PreconditionViolated,
  InvalidTrajectory,
};

enum class MartingaleErrc {
  NotInHyperplane,
  DomainViolation,
  AdmissibilityViolation,
  BoundaryPoint,
  QuadratureDivergence,
  InvalidArgument,
};

enum class ScalingErrc {
  RegimeMismatch,
  InvalidPlan,
};

enum class ConfigErrc {
  ConfigInvalid,
  SpectralRejection,
  Io,
};

using SpectralError = Error<SpectralErrc>;
using StateError = Error<StateErrc>;
using SimulationError = Error<SimulationErrc>;
using MartingaleError = Error<MartingaleErrc>;
using ScalingError = Error<ScalingErrc>;
using ConfigError = Error<ConfigErrc>;

const char* to_string(SpectralErrc k);
const char* to_string(StateErrc k);
const char* to_string(SimulationErrc k);
const char* to_string(MartingaleErrc k);
const char* to_string(ScalingErrc k);
const char* to_string(ConfigErrc k);

}  // namespace mobnet
