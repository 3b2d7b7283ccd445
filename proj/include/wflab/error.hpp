#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wflab {

/// Failure categories surfaced by the library. Each has a stable kebab-case
/// name (see to_string) that ends up in CLI diagnostics and JSON reports.
enum class ErrorCode {
  InvalidArgument,
  InvalidParameters,
  StateOutOfRange,
  QuadratureBudgetExceeded,
  NotPositiveRecurrent,
  BoundaryNotAccessibleIntegrable,
  MomentInfinite,
  DegenerateCycle,
  EmptyParameterGrid,
  FunctionalSingular,
  DegeneratePath,
  LocalParameterOutOfRange,
  PosteriorDegenerate,
  ValidationFailed,
  LanRegimeRequired,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by numerics (divergence, budget) rather than by
  /// malformed input.
  bool is_numeric() const noexcept;

 private:
  ErrorCode code_;
};

/// Raised when adaptive quadrature runs out of budget; carries the best
/// estimate reached so far.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& detail, double best_estimate, double abs_error);

  double best_estimate() const noexcept { return best_estimate_; }
  double abs_error() const noexcept { return abs_error_; }

 private:
  double best_estimate_;
  double abs_error_;
};

}  // namespace wflab
