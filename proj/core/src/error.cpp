#include "bioage/error.hpp"

namespace bioage {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchema: return "schema_error";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kDuplicate: return "duplication_error";
    case ErrorCode::kEmptyCohort: return "empty_cohort_error";
    case ErrorCode::kChronology: return "chronology_error";
    case ErrorCode::kConfig: return "configuration_error";
    case ErrorCode::kUnimputable: return "unimputable_column_error";
    case ErrorCode::kAlignment: return "alignment_error";
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kFit: return "fit_error";
    case ErrorCode::kDegenerate: return "degenerate_error";
    case ErrorCode::kModelIntegrity: return "model_integrity_error";
    case ErrorCode::kInsufficientGroup: return "insufficient_group_error";
    case ErrorCode::kUndefinedStatistic: return "undefined_statistic_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown_error";
}

}  // namespace bioage
