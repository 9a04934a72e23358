#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>

namespace stayinsight {

using Duration = std::chrono::nanoseconds;
using TimePoint = std::chrono::sys_time<std::chrono::nanoseconds>;
using Date = std::chrono::year_month_day;

/// Injectable time source. Everything that waits or measures goes through a
/// Clock so tests can run against simulated time.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
  virtual void sleep_for(Duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override;
  void sleep_for(Duration d) override;
};

/// Manually driven clock. `sleep_for` advances time instantly.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(TimePoint start = default_start()) : ticks_(start.time_since_epoch().count()) {}

  TimePoint now() const override { return TimePoint(Duration(ticks_.load())); }
  void sleep_for(Duration d) override { advance(d); }
  void advance(Duration d) { ticks_.fetch_add(d.count()); }
  void set(TimePoint t) { ticks_.store(t.time_since_epoch().count()); }

  /// 2024-11-01T00:00:00Z, a fixed reference instant for deterministic runs.
  static TimePoint default_start();

 private:
  std::atomic<Duration::rep> ticks_;
};

double to_seconds(Duration d);
Duration from_seconds(double seconds);

/// Strict "YYYY-MM-DD". Throws Error(InvalidArgument).
Date parse_date(std::string_view text);
std::string format_date(Date d);
Date date_of(TimePoint t);
/// Signed day difference `to - from`.
int days_between(Date from, Date to);

/// "YYYY-MM-DDTHH:MM:SSZ" (seconds precision, UTC).
std::string format_timestamp(TimePoint t);
TimePoint parse_timestamp(std::string_view text);

}  // namespace stayinsight
