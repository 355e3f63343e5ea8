#pragma once

#include <stdexcept>
#include <string>

namespace infotrans {

enum class ErrorKind {
  kDimensionMismatch,
  kIndexOutOfRange,
  kLengthMismatch,
  kInvalidSubset,
  kInvalidSize,
  kInvalidArgument,
  kNotPositiveSemidefinite,
  kUnstable,
  kDegenerateOutput,
  kNoConvergence,
  kSingularInnovation,
  kSingularCovariance,
  kSingularGramian,
  kSingularTargetNoise,
  kBoundsUndefined,
  kParseError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kInvalidSubset: return "InvalidSubset";
    case ErrorKind::kInvalidSize: return "InvalidSize";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kNotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorKind::kUnstable: return "Unstable";
    case ErrorKind::kDegenerateOutput: return "DegenerateOutput";
    case ErrorKind::kNoConvergence: return "NoConvergence";
    case ErrorKind::kSingularInnovation: return "SingularInnovation";
    case ErrorKind::kSingularCovariance: return "SingularCovariance";
    case ErrorKind::kSingularGramian: return "SingularGramian";
    case ErrorKind::kSingularTargetNoise: return "SingularTargetNoise";
    case ErrorKind::kBoundsUndefined: return "BoundsUndefined";
    case ErrorKind::kParseError: return "ParseError";
  }
  return "Unknown";
}

/// Coarse grouping used by the command line front end for exit statuses.
enum class ErrorCategory { kParse, kValidation, kNumerical };

inline ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParseError:
      return ErrorCategory::kParse;
    case ErrorKind::kNoConvergence:
    case ErrorKind::kSingularInnovation:
    case ErrorKind::kSingularCovariance:
    case ErrorKind::kSingularGramian:
    case ErrorKind::kSingularTargetNoise:
    case ErrorKind::kBoundsUndefined:
      return ErrorCategory::kNumerical;
    default:
      return ErrorCategory::kValidation;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace infotrans
