#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace warplab {

// Extended precision is used throughout: ladder radii of two periods reach
// ~1e1386 and their squares must stay representable.
using real = long double;

inline constexpr real kPi = std::numbers::pi_v<long double>;
inline constexpr real kTwoPi = 2 * kPi;

enum class ErrorKind {
  NonPositiveWarping,
  StepTooLarge,
  InvalidArgument,
  ContinuityViolation,
  BlendOverlap,
  MonotonicityLoss,
  NotCertified,
  OutOfRange,
  QuadratureFailure,
  TargetUnreachable,
  ResourceLimit,
  WindowEmpty,
  DegenerateRange,
  UnsupportedPair,
  WindowTooNarrow,
  ConfigError,
  CacheError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace warplab
