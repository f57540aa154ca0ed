#pragma once

#include <stdexcept>
#include <string>

namespace staircase_lab {

/// Machine-readable failure category carried by every library exception.
enum class ErrorKind {
  TwistViolated,
  DegenerateTwist,
  NoConvergence,
  SaddleOnly,
  DegenerateFamily,
  EmptyTable,
  OverlapDetected,
  NonconvexTerm,
  InsufficientSamples,
  NegativeU,
  ConfigError,
  CorruptRecord,
  VersionConflict,
  IoError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TwistViolated: return "TwistViolated";
    case ErrorKind::DegenerateTwist: return "DegenerateTwist";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SaddleOnly: return "SaddleOnly";
    case ErrorKind::DegenerateFamily: return "DegenerateFamily";
    case ErrorKind::EmptyTable: return "EmptyTable";
    case ErrorKind::OverlapDetected: return "OverlapDetected";
    case ErrorKind::NonconvexTerm: return "NonconvexTerm";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::NegativeU: return "NegativeU";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::CorruptRecord: return "CorruptRecord";
    case ErrorKind::VersionConflict: return "VersionConflict";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace staircase_lab
