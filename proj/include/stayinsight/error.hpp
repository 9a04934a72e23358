#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stayinsight {

enum class ErrorCode {
  MalformedUrl,
  UnsupportedHost,
  SchemaMismatch,
  ScoreOutOfRange,
  InvalidReview,
  ProviderDisabled,
  NetworkFailure,
  NoReviewsFound,
  ProviderQuotaExceeded,
  LayoutNotRecognized,
  UnknownProvider,
  EmptyInput,
  BudgetTooSmall,
  EmptyQuery,
  PlanCorpusMismatch,
  UnknownModel,
  DuplicateModel,
  ProviderError,
  ContextOverflow,
  Timeout,
  RateLimited,
  TokenRequestTooLarge,
  EmptyCorpus,
  EmptyQuestion,
  MissingBinding,
  UnknownPlaceholder,
  EmptyReport,
  NotFound,
  NotReady,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library. `code()` is the
/// machine-readable taxonomy used by the CLI and the HTTP layer.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, bool retriable = false)
      : std::runtime_error(message), code_(code), retriable_(retriable) {}

  ErrorCode code() const noexcept { return code_; }
  bool retriable() const noexcept { return retriable_; }

  // Upstream HTTP status for ProviderError, 0 otherwise.
  int upstream_status() const noexcept { return upstream_status_; }
  Error& with_upstream_status(int status) noexcept {
    upstream_status_ = status;
    return *this;
  }

 private:
  ErrorCode code_;
  bool retriable_;
  int upstream_status_ = 0;
};

}  // namespace stayinsight
