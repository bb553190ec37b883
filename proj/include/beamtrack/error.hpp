#pragma once

#include <stdexcept>
#include <string>

namespace beamtrack {

enum class Errc {
  NotSymmetric,
  IndefiniteMatrix,
  SingularB,
  DimensionMismatch,
  ZeroMatrix,
  SingularAngle,
  NonpositiveStep,
  NotUnitNorm,
  EmptyBeamSet,
  NonpositiveSnr,
  BadScaling,
  IndefiniteCovariance,
  SingularInnovation,
  BadBeamCount,
  BadWeights,
  BadConfig,
  ZeroChannel,
  EmptyInput,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::IndefiniteMatrix: return "IndefiniteMatrix";
    case Errc::SingularB: return "SingularB";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ZeroMatrix: return "ZeroMatrix";
    case Errc::SingularAngle: return "SingularAngle";
    case Errc::NonpositiveStep: return "NonpositiveStep";
    case Errc::NotUnitNorm: return "NotUnitNorm";
    case Errc::EmptyBeamSet: return "EmptyBeamSet";
    case Errc::NonpositiveSnr: return "NonpositiveSnr";
    case Errc::BadScaling: return "BadScaling";
    case Errc::IndefiniteCovariance: return "IndefiniteCovariance";
    case Errc::SingularInnovation: return "SingularInnovation";
    case Errc::BadBeamCount: return "BadBeamCount";
    case Errc::BadWeights: return "BadWeights";
    case Errc::BadConfig: return "BadConfig";
    case Errc::ZeroChannel: return "ZeroChannel";
    case Errc::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace beamtrack
