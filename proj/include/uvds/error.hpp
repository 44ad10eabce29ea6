#pragma once

#include <stdexcept>
#include <string>

namespace uvds {

/// Error taxonomy. Validation errors are caller mistakes (bad arguments,
/// malformed files); numerical errors are failures of the computation
/// itself. The CLI maps them to exit codes 2 and 3 respectively.
enum class ErrorKind {
  // validation
  IoError,
  ShapeMismatch,
  UnknownClass,
  EmptySide,
  ClassTooSmall,
  BadK,
  SingleClass,
  EmptyAnchors,
  LengthMismatch,
  InvalidArgument,
  // numerical
  NonFinite,
  NoConvergence,
  SingularPencil,
  RankDeficient,
  Diverged,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::EmptySide: return "EmptySide";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::BadK: return "BadK";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::EmptyAnchors: return "EmptyAnchors";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularPencil: return "SingularPencil";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Diverged: return "Diverged";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  bool is_validation() const noexcept {
    switch (kind_) {
      case ErrorKind::NonFinite:
      case ErrorKind::NoConvergence:
      case ErrorKind::SingularPencil:
      case ErrorKind::RankDeficient:
      case ErrorKind::Diverged:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace uvds
