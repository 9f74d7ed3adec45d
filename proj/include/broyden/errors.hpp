#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace broyden {

enum class ErrorKind {
  DimensionMismatch,
  CurvatureTooSmall,
  DegenerateDenominator,
  Sr1Undefined,
  NearSingularUpdate,
  SingularMiddleMatrix,
  NumericalBreakdown,
  ResampleLimitExceeded,
  InvalidArgument,
  IoError,
  ParseError,
  SchemaError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::CurvatureTooSmall: return "CurvatureTooSmall";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::Sr1Undefined: return "Sr1Undefined";
    case ErrorKind::NearSingularUpdate: return "NearSingularUpdate";
    case ErrorKind::SingularMiddleMatrix: return "SingularMiddleMatrix";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::ResampleLimitExceeded: return "ResampleLimitExceeded";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

// Numerical errors carry the index of the update step that failed, when
// there is one. Parse errors carry the offending line in `location`.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<std::size_t> location = std::nullopt)
      : std::runtime_error(format(kind, what, location)),
        kind_(kind),
        location_(location) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> step() const noexcept { return location_; }
  std::optional<std::size_t> line() const noexcept { return location_; }

  bool is_numerical() const noexcept {
    switch (kind_) {
      case ErrorKind::CurvatureTooSmall:
      case ErrorKind::DegenerateDenominator:
      case ErrorKind::Sr1Undefined:
      case ErrorKind::NearSingularUpdate:
      case ErrorKind::SingularMiddleMatrix:
      case ErrorKind::NumericalBreakdown:
      case ErrorKind::ResampleLimitExceeded:
        return true;
      default:
        return false;
    }
  }

  // Rethrow with a step index attached (used when folding over pairs).
  Error at_step(std::size_t step) const {
    return Error(kind_, bare_message(), step);
  }

 private:
  static std::string format(ErrorKind kind, const std::string& what,
                            std::optional<std::size_t> location) {
    std::string msg(to_string(kind));
    if (location) {
      msg += kind == ErrorKind::ParseError || kind == ErrorKind::SchemaError
                 ? " (line "
                 : " (step ";
      msg += std::to_string(*location) + ")";
    }
    return msg + ": " + what;
  }

  std::string bare_message() const {
    std::string msg = what();
    auto pos = msg.find(": ");
    return pos == std::string::npos ? msg : msg.substr(pos + 2);
  }

  ErrorKind kind_;
  std::optional<std::size_t> location_;
};

}  // namespace broyden
