#include <gtest/gtest.h>

#include <random>

#include "stayinsight/error.hpp"
#include "stayinsight/money.hpp"

using stayinsight::ErrorCode;
using stayinsight::Usd;

TEST(Usd, ParsesAndPrintsShortestForm) {
  EXPECT_EQ(Usd::parse("30").to_string(), "30.00");
  EXPECT_EQ(Usd::parse("2.50").to_string(), "2.50");
  EXPECT_EQ(Usd::parse("0.0375").to_string(), "0.0375");
  EXPECT_EQ(Usd::parse("0.000000000001").pico(), 1);
  EXPECT_EQ(Usd::parse("-1.5").pico(), -1'500'000'000'000);
  EXPECT_EQ(Usd().to_string(), "0.00");
}

TEST(Usd, RejectsBadSyntax) {
  for (const char* bad : {"", "abc", "1.2.3", "1e5", "0.0000000000001", "$1", " 1"}) {
    try {
      (void)Usd::parse(bad);
      FAIL() << "accepted '" << bad << "'";
    } catch (const stayinsight::Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidArgument) << bad;
    }
  }
}

TEST(Usd, DisplayRoundsHalfEven) {
  EXPECT_EQ(Usd::parse("0.0000125").display(5), "0.00001");  // ...125 -> 12 (even)
  EXPECT_EQ(Usd::parse("0.0000135").display(5), "0.00001");
  EXPECT_EQ(Usd::parse("0.0000135").display(6), "0.000014");
  EXPECT_EQ(Usd::parse("0.0000145").display(6), "0.000014");
  EXPECT_EQ(Usd::parse("2.5").display(0), "2");
  EXPECT_EQ(Usd::parse("3.5").display(0), "4");
  EXPECT_EQ(Usd::parse("0.0375").display(2), "0.04");
}

TEST(Usd, DisplayMatchesIntegerOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t pico = static_cast<std::int64_t>(rng() % 10'000'000'000'000ULL);
    const int digits = static_cast<int>(rng() % 7);
    std::int64_t unit = 1;
    for (int d = 0; d < 12 - digits; ++d) unit *= 10;
    std::int64_t q = pico / unit;
    const std::int64_t r = pico % unit;
    if (2 * r > unit || (2 * r == unit && q % 2 == 1)) ++q;
    std::int64_t whole_unit = 1;
    for (int d = 0; d < digits; ++d) whole_unit *= 10;
    std::string expect = std::to_string(q / whole_unit);
    if (digits > 0) {
      std::string frac = std::to_string(q % whole_unit);
      expect += "." + std::string(static_cast<std::size_t>(digits) - frac.size(), '0') + frac;
    }
    ASSERT_EQ(Usd::from_pico(pico).display(digits), expect) << pico << " @" << digits;
  }
}

TEST(Usd, ArithmeticIsExact) {
  Usd sum;
  for (int i = 0; i < 1000; ++i) sum += Usd::parse("0.0375");
  EXPECT_EQ(sum, Usd::parse("37.5"));
  EXPECT_EQ(Usd::parse("1.50").scaled(200, 1000), Usd::parse("0.30"));
  EXPECT_EQ(Usd::parse("30").scaled(8192, 1'000'000), Usd::parse("0.24576"));
  EXPECT_THROW((void)Usd::from_pico(1).scaled(1, 3), stayinsight::Error);
  EXPECT_EQ(Usd::from_pico(5).scaled_rounded(1, 2), Usd::from_pico(2));
  EXPECT_EQ(Usd::from_pico(7).scaled_rounded(1, 2), Usd::from_pico(4));
  EXPECT_LT(Usd::parse("0.01"), Usd::parse("0.010000000001"));
}
