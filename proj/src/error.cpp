#include "wflab/error.hpp"

namespace wflab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidParameters: return "invalid-parameters";
    case ErrorCode::StateOutOfRange: return "state-out-of-range";
    case ErrorCode::QuadratureBudgetExceeded: return "quadrature-budget-exceeded";
    case ErrorCode::NotPositiveRecurrent: return "not-positive-recurrent";
    case ErrorCode::BoundaryNotAccessibleIntegrable: return "boundary-not-accessible-integrable";
    case ErrorCode::MomentInfinite: return "moment-infinite";
    case ErrorCode::DegenerateCycle: return "degenerate-cycle";
    case ErrorCode::EmptyParameterGrid: return "empty-parameter-grid";
    case ErrorCode::FunctionalSingular: return "functional-singular";
    case ErrorCode::DegeneratePath: return "degenerate-path";
    case ErrorCode::LocalParameterOutOfRange: return "local-parameter-out-of-range";
    case ErrorCode::PosteriorDegenerate: return "posterior-degenerate";
    case ErrorCode::ValidationFailed: return "validation-failed";
    case ErrorCode::LanRegimeRequired: return "lan-regime-required";
    case ErrorCode::ConfigError: return "config-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

bool Error::is_numeric() const noexcept {
  switch (code_) {
    case ErrorCode::QuadratureBudgetExceeded:
    case ErrorCode::NotPositiveRecurrent:
    case ErrorCode::BoundaryNotAccessibleIntegrable:
    case ErrorCode::MomentInfinite:
    case ErrorCode::DegeneratePath:
    case ErrorCode::PosteriorDegenerate:
    case ErrorCode::FunctionalSingular:
      return true;
    default:
      return false;
  }
}

QuadratureError::QuadratureError(const std::string& detail, double best_estimate,
                                 double abs_error)
    : Error(ErrorCode::QuadratureBudgetExceeded, detail),
      best_estimate_(best_estimate),
      abs_error_(abs_error) {}

}  // namespace wflab
