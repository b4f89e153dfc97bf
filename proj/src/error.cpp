#include "mobnet/error.hpp"

namespace mobnet {

const char* to_string(SpectralErrc k) {
  switch (k) {
    case SpectralErrc::InvalidShape: return "InvalidShape";
    case SpectralErrc::InvalidRate: return "InvalidRate";
    case SpectralErrc::RowSumViolation: return "RowSumViolation";
    case SpectralErrc::NotIrreducible: return "NotIrreducible";
    case SpectralErrc::NotDiagonalizable: return "NotDiagonalizable";
    case SpectralErrc::ImaginaryResidue: return "ImaginaryResidue";
  }
  return "?";
}

const char* to_string(StateErrc k) {
  switch (k) {
    case StateErrc::InvalidState: return "InvalidState";
    case StateErrc::InvalidSimplexPoint: return "InvalidSimplexPoint";
    case StateErrc::DegenerateReference: return "DegenerateReference";
    case StateErrc::CertificationFailed: return "CertificationFailed";
  }
  return "?";
}

const char* to_string(SimulationErrc k) {
  switch (k) {
    case SimulationErrc::InvalidParams: return "InvalidParams";
    case SimulationErrc::RateOverflow: return "RateOverflow";
    case SimulationErrc::PreconditionViolated: return "PreconditionViolated";
    case SimulationErrc::InvalidTrajectory: return "InvalidTrajectory";
  }
  return "?";
}

const char* to_string(MartingaleErrc k) {
  switch (k) {
    case MartingaleErrc::NotInHyperplane: return "NotInHyperplane";
    case MartingaleErrc::DomainViolation: return "DomainViolation";
    case MartingaleErrc::AdmissibilityViolation: return "AdmissibilityViolation";
    case MartingaleErrc::BoundaryPoint: return "BoundaryPoint";
    case MartingaleErrc::QuadratureDivergence: return "QuadratureDivergence";
    case MartingaleErrc::InvalidArgument: return "InvalidArgument";
  }
  return "?";
}

const char* to_string(ScalingErrc k) {
  switch (k) {
    case ScalingErrc::RegimeMismatch: return "RegimeMismatch";
    case ScalingErrc::InvalidPlan: return "InvalidPlan";
  }
  return "?";
}

const char* to_string(ConfigErrc k) {
  switch (k) {
    case ConfigErrc::ConfigInvalid: return "ConfigInvalid";
    case ConfigErrc::SpectralRejection: return "SpectralRejection";
    case ConfigErrc::Io: return "Io";
  }
  return "?";
}

}  // namespace mobnet
