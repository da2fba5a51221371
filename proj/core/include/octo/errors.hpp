#pragma once

#include <stdexcept>
#include <string>

namespace octo {

enum class ErrorCode {
  kGimbalLock,
  kConfig,
  kGainCondition,
  kDegenerateThrust,
  kNonFinite,
  kDiverged,
  kEmptySeries,
};

const char* to_string(ErrorCode code);

// Base class for every error raised by the library. Callers that only care
// about the category can switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define OCTO_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Code, what) {}      \
  }

OCTO_DEFINE_ERROR(GimbalLock, ErrorCode::kGimbalLock);
OCTO_DEFINE_ERROR(ConfigError, ErrorCode::kConfig);
OCTO_DEFINE_ERROR(GainConditionError, ErrorCode::kGainCondition);
OCTO_DEFINE_ERROR(DegenerateThrust, ErrorCode::kDegenerateThrust);
OCTO_DEFINE_ERROR(NonFinite, ErrorCode::kNonFinite);
OCTO_DEFINE_ERROR(EmptySeries, ErrorCode::kEmptySeries);

#undef OCTO_DEFINE_ERROR

// Raised when the closed loop blows up. Carries the simulated time at which
// the guard fired so callers can mark partial logs.
class Diverged : public Error {
 public:
  Diverged(double t, const std::string& what)
      : Error(ErrorCode::kDiverged, what), time_(t) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace octo
