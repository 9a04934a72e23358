#include <gtest/gtest.h>

#include "stayinsight/error.hpp"
#include "stayinsight/text.hpp"
#include "stayinsight/time.hpp"

using namespace stayinsight;

TEST(Text, Utf8LengthCountsCodePoints) {
  EXPECT_EQ(text::utf8_length(""), 0u);
  EXPECT_EQ(text::utf8_length("abc"), 3u);
  EXPECT_EQ(text::utf8_length("καλημέρα"), 8u);
  EXPECT_EQ(text::utf8_length("−"), 1u);
  EXPECT_EQ(text::utf8_length("😀x"), 2u);
}

TEST(Text, WordTokensLowercaseAndSplit) {
  EXPECT_EQ(text::word_tokens("Is the WiFi fast?"), (std::vector<std::string>{"is", "the", "wifi", "fast"}));
  EXPECT_EQ(text::word_tokens("check-in 24/7"), (std::vector<std::string>{"check", "in", "24", "7"}));
  EXPECT_EQ(text::word_tokens("  ?!  "), std::vector<std::string>{});
  EXPECT_EQ(text::word_tokens("Πάρκινγκ free").size(), 2u);
}

TEST(Text, TrimAndCollapse) {
  EXPECT_EQ(text::trim("  a b \n"), "a b");
  EXPECT_EQ(text::collapse_whitespace(" a \t\n b  c "), "a b c");
  EXPECT_TRUE(text::starts_with_ci("HTTPS://x", "https://"));
}

TEST(Time, DatesRoundTrip) {
  const Date d = parse_date("2024-02-29");
  EXPECT_EQ(format_date(d), "2024-02-29");
  EXPECT_THROW(parse_date("2023-02-29"), Error);
  EXPECT_THROW(parse_date("2024-1-01"), Error);
  EXPECT_THROW(parse_date("yesterday"), Error);
  EXPECT_EQ(days_between(parse_date("2024-01-01"), parse_date("2024-03-01")), 60);
}

TEST(Time, TimestampsRoundTrip) {
  const TimePoint t = SimulatedClock::default_start();
  EXPECT_EQ(format_timestamp(t), "2024-11-01T00:00:00Z");
  EXPECT_EQ(parse_timestamp("2024-11-01T00:00:00Z"), t);
  EXPECT_EQ(format_timestamp(t + std::chrono::hours(25) + std::chrono::seconds(7)), "2024-11-02T01:00:07Z");
}

TEST(Time, SimulatedClockSleepsInstantly) {
  SimulatedClock clock;
  const auto start = clock.now();
  clock.sleep_for(std::chrono::hours(3));
  EXPECT_EQ(clock.now() - start, std::chrono::hours(3));
  EXPECT_DOUBLE_EQ(to_seconds(from_seconds(2.5)), 2.5);
}
