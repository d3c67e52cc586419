#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lattheta {

enum class ErrorCode {
  kInvalidArgument,
  kRankDeficient,
  kOverflow,
  kNumericallyRankDeficient,
  kSingular,
  kEnumerationBudgetExceeded,
  kNotNested,
  kUnknownLattice,
  kGeneratorUnavailable,
  kDomainError,
  kUnknownForm,
  kNonIntegerLattice,
  kDimensionMismatch,
  kInconsistentBundle,
  kDegenerate,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Process exit status used by the CLI for each error kind. Never 0 or 1.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lattheta
