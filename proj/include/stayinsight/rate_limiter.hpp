#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <utility>

#include "stayinsight/model_registry.hpp"
#include "stayinsight/time.hpp"

namespace stayinsight {

struct PermitDecision {
  enum class Status { Granted, RetryAfter, TokenRequestTooLarge };
  Status status = Status::Granted;
  Duration retry_after{0};  // only meaningful for RetryAfter

  bool granted() const { return status == Status::Granted; }
};

/// Sliding-window limiter over requests/minute, requests/day and
/// tokens/minute. An event at time t occupies every window containing
/// [t, t + length). A request is granted only if all configured dimensions
/// admit it; a denial reports the wait until every dimension would admit.
/// Time is clamped to be non-decreasing across calls.
class RateLimiter {
 public:
  static constexpr Duration kMinute = std::chrono::minutes(1);
  static constexpr Duration kDay = std::chrono::hours(24);

  explicit RateLimiter(RateLimitPolicy policy) : policy_(policy) {}

  PermitDecision acquire(std::uint64_t tokens, TimePoint now);
  PermitDecision acquire(std::uint64_t tokens, const Clock& clock) { return acquire(tokens, clock.now()); }

  const RateLimitPolicy& policy() const { return policy_; }

 private:
  void evict(TimePoint now);

  RateLimitPolicy policy_;
  std::mutex mutex_;
  std::deque<TimePoint> minute_requests_;
  std::deque<TimePoint> day_requests_;
  std::deque<std::pair<TimePoint, std::uint64_t>> minute_tokens_;
  std::uint64_t minute_token_sum_ = 0;
  TimePoint last_seen_{};
};

}  // namespace stayinsight
