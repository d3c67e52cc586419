#include "lattheta/errors.hpp"

namespace lattheta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kNumericallyRankDeficient: return "NumericallyRankDeficient";
    case ErrorCode::kSingular: return "Singular";
    case ErrorCode::kEnumerationBudgetExceeded: return "EnumerationBudgetExceeded";
    case ErrorCode::kNotNested: return "NotNested";
    case ErrorCode::kUnknownLattice: return "UnknownLattice";
    case ErrorCode::kGeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kUnknownForm: return "UnknownForm";
    case ErrorCode::kNonIntegerLattice: return "NonIntegerLattice";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInconsistentBundle: return "InconsistentBundle";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError: return 2;
    case ErrorCode::kIoError: return 3;
    default: return 10 + static_cast<int>(code);
  }
}

}  // namespace lattheta
