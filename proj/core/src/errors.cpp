#include "octo/errors.hpp"

namespace octo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kGimbalLock: return "GimbalLock";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kGainCondition: return "GainCondition";
    case ErrorCode::kDegenerateThrust: return "DegenerateThrust";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kEmptySeries: return "EmptySeries";
  }
  return "Unknown";
}

}  // namespace octo
