#include "warplab/types.hpp"

namespace warplab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveWarping: return "NonPositiveWarping";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ContinuityViolation: return "ContinuityViolation";
    case ErrorKind::BlendOverlap: return "BlendOverlap";
    case ErrorKind::MonotonicityLoss: return "MonotonicityLoss";
    case ErrorKind::NotCertified: return "NotCertified";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::TargetUnreachable: return "TargetUnreachable";
    case ErrorKind::ResourceLimit: return "ResourceLimit";
    case ErrorKind::WindowEmpty: return "WindowEmpty";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::UnsupportedPair: return "UnsupportedPair";
    case ErrorKind::WindowTooNarrow: return "WindowTooNarrow";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::CacheError: return "CacheError";
  }
  return "Unknown";
}

}  // namespace warplab
