#include "stayinsight/rate_limiter.hpp"

#include <algorithm>

namespace stayinsight {

void RateLimiter::evict(TimePoint now) {
  while (!minute_requests_.empty() && minute_requests_.front() + kMinute <= now) minute_requests_.pop_front();
  while (!day_requests_.empty() && day_requests_.front() + kDay <= now) day_requests_.pop_front();
  while (!minute_tokens_.empty() && minute_tokens_.front().first + kMinute <= now) {
    minute_token_sum_ -= minute_tokens_.front().second;
    minute_tokens_.pop_front();
  }
}

PermitDecision RateLimiter::acquire(std::uint64_t tokens, TimePoint now) {
  std::lock_guard lock(mutex_);
  now = std::max(now, last_seen_);
  last_seen_ = now;
  if (policy_.tokens_per_minute && tokens > *policy_.tokens_per_minute) {
    return {PermitDecision::Status::TokenRequestTooLarge, Duration::zero()};
  }
  evict(now);

  TimePoint admit_at = now;
  auto count_limit = [&](const std::deque<TimePoint>& log, std::uint64_t limit, Duration window) {
    if (log.size() < limit) return;
    // The (size - limit)-th oldest event has to leave the window.
    admit_at = std::max(admit_at, log[log.size() - limit] + window);
  };
  if (policy_.requests_per_minute) count_limit(minute_requests_, *policy_.requests_per_minute, kMinute);
  if (policy_.requests_per_day) count_limit(day_requests_, *policy_.requests_per_day, kDay);
  if (policy_.tokens_per_minute && minute_token_sum_ + tokens > *policy_.tokens_per_minute) {
    std::uint64_t remaining = minute_token_sum_;
    for (const auto& [t, n] : minute_tokens_) {
      remaining -= n;
      if (remaining + tokens <= *policy_.tokens_per_minute) {
        admit_at = std::max(admit_at, t + kMinute);
        break;
      }
    }
  }

  if (admit_at > now) return {PermitDecision::Status::RetryAfter, admit_at - now};

  if (policy_.requests_per_minute) minute_requests_.push_back(now);
  if (policy_.requests_per_day) day_requests_.push_back(now);
  if (policy_.tokens_per_minute) {
    minute_tokens_.emplace_back(now, tokens);
    minute_token_sum_ += tokens;
  }
  return {PermitDecision::Status::Granted, Duration::zero()};
}

}  // namespace stayinsight
