#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bioage {

enum class ErrorCode {
  kSchema,
  kParse,
  kDuplicate,
  kEmptyCohort,
  kChronology,
  kConfig,
  kUnimputable,
  kAlignment,
  kValidation,
  kFit,
  kDegenerate,
  kModelIntegrity,
  kInsufficientGroup,
  kUndefinedStatistic,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code; the
// CLI maps it to a structured message on stderr and a nonzero exit status.
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

}  // namespace bioage
