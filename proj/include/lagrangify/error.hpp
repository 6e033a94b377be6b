#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lagrangify {

enum class ErrorCode {
  InvalidArgument,
  IndexOutOfRange,
  MissingForcing,
  ParseError,
  SpecInvalid,
  NonUniformTimeGrid,
  BadColumn,
  UnknownPreset,
  EmptySupport,
  NoConvergence,
  ResidualTooLarge,
  InconsistentCoupling,
  NonDiagonalKinetic,
  TemplateMismatch,
  NonFinite,
  CflViolation,
  StabilityViolation,
};

constexpr std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingForcing: return "MissingForcing";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::NonUniformTimeGrid: return "NonUniformTimeGrid";
    case ErrorCode::BadColumn: return "BadColumn";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::InconsistentCoupling: return "InconsistentCoupling";
    case ErrorCode::NonDiagonalKinetic: return "NonDiagonalKinetic";
    case ErrorCode::TemplateMismatch: return "TemplateMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
  }
  return "Unknown";
}

// Process exit status used by the command line tool.
constexpr int exit_code(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownPreset:
      return 2;
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::MissingForcing:
    case ErrorCode::ParseError:
    case ErrorCode::SpecInvalid:
    case ErrorCode::NonUniformTimeGrid:
    case ErrorCode::BadColumn:
      return 3;
    case ErrorCode::EmptySupport:
    case ErrorCode::NoConvergence:
    case ErrorCode::ResidualTooLarge:
    case ErrorCode::InconsistentCoupling:
    case ErrorCode::NonDiagonalKinetic:
    case ErrorCode::TemplateMismatch:
      return 4;
    case ErrorCode::NonFinite:
    case ErrorCode::CflViolation:
    case ErrorCode::StabilityViolation:
      return 5;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lagrangify
