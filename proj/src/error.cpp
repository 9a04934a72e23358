#include "stayinsight/error.hpp"

namespace stayinsight {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedUrl: return "MalformedUrl";
    case ErrorCode::UnsupportedHost: return "UnsupportedHost";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::InvalidReview: return "InvalidReview";
    case ErrorCode::ProviderDisabled: return "ProviderDisabled";
    case ErrorCode::NetworkFailure: return "NetworkFailure";
    case ErrorCode::NoReviewsFound: return "NoReviewsFound";
    case ErrorCode::ProviderQuotaExceeded: return "ProviderQuotaExceeded";
    case ErrorCode::LayoutNotRecognized: return "LayoutNotRecognized";
    case ErrorCode::UnknownProvider: return "UnknownProvider";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::PlanCorpusMismatch: return "PlanCorpusMismatch";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::DuplicateModel: return "DuplicateModel";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::TokenRequestTooLarge: return "TokenRequestTooLarge";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::UnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace stayinsight
