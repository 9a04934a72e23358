#include "stayinsight/time.hpp"

#include <charconv>
#include <cstdio>
#include <thread>

#include "stayinsight/error.hpp"

namespace stayinsight {

using namespace std::chrono;

TimePoint SystemClock::now() const { return time_point_cast<nanoseconds>(system_clock::now()); }

void SystemClock::sleep_for(Duration d) {
  if (d > Duration::zero()) std::this_thread::sleep_for(d);
}

TimePoint SimulatedClock::default_start() {
  return TimePoint(sys_days(year{2024} / November / 1).time_since_epoch());
}

double to_seconds(Duration d) { return duration<double>(d).count(); }

Duration from_seconds(double seconds) {
  return duration_cast<Duration>(duration<double>(seconds));
}

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  const char* first = text.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') throw Error(ErrorCode::InvalidArgument, "bad date: '" + std::string(text) + "'");
  }
  std::from_chars(first, last, value);
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorCode::InvalidArgument, "bad date: '" + std::string(text) + "'");
  }
  const Date d{year{parse_fixed(text, 0, 4)}, month{static_cast<unsigned>(parse_fixed(text, 5, 2))},
               day{static_cast<unsigned>(parse_fixed(text, 8, 2))}};
  if (!d.ok()) throw Error(ErrorCode::InvalidArgument, "invalid calendar date: '" + std::string(text) + "'");
  return d;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

Date date_of(TimePoint t) { return Date{floor<days>(t)}; }

int days_between(Date from, Date to) {
  return static_cast<int>((sys_days(to) - sys_days(from)).count());
}

std::string format_timestamp(TimePoint t) {
  const auto day_point = floor<days>(t);
  const Date d{day_point};
  const hh_mm_ss tod{floor<seconds>(t - day_point)};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(d).c_str(), static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
  return buf;
}

TimePoint parse_timestamp(std::string_view text) {
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    throw Error(ErrorCode::InvalidArgument, "bad timestamp: '" + std::string(text) + "'");
  }
  const Date d = parse_date(text.substr(0, 10));
  const int h = parse_fixed(text, 11, 2);
  const int m = parse_fixed(text, 14, 2);
  const int s = parse_fixed(text, 17, 2);
  if (h > 23 || m > 59 || s > 60) throw Error(ErrorCode::InvalidArgument, "bad timestamp: '" + std::string(text) + "'");
  return TimePoint(sys_days(d).time_since_epoch() + hours(h) + minutes(m) + seconds(s));
}

}  // namespace stayinsight
