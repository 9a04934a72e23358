#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace stayinsight {

/// Exact USD amount stored as an integer count of 10^-12 dollars.
///
/// Per-token rates are quoted per million tokens with up to six fractional
/// digits, so `tokens * rate / 1e6` always lands on the 10^-12 grid and sums
/// of costs stay exact. Rounding (half-even) happens only in `display()`.
class Usd {
 public:
  static constexpr int kScaleDigits = 12;
  static constexpr std::int64_t kScale = 1'000'000'000'000;

  constexpr Usd() = default;

  static constexpr Usd from_pico(std::int64_t pico) { return Usd(pico); }
  static constexpr Usd from_micro(std::int64_t micro) { return Usd(micro * 1'000'000); }
  static constexpr Usd whole(std::int64_t dollars) { return Usd(dollars * kScale); }

  /// Parses "2.50", "0.000150", "30". Throws Error(InvalidArgument) on bad
  /// syntax or more than 12 fractional digits.
  static Usd parse(std::string_view text);

  constexpr std::int64_t pico() const { return pico_; }
  constexpr bool is_zero() const { return pico_ == 0; }
  double to_double() const { return static_cast<double>(pico_) / static_cast<double>(kScale); }

  /// Shortest exact decimal with at least two fractional digits ("0.0375", "90.00").
  std::string to_string() const;
  /// Fixed `digits` fractional digits, rounded half-even.
  std::string display(int digits = 6) const;

  Usd& operator+=(Usd other);
  friend Usd operator+(Usd a, Usd b) { return a += b; }
  friend Usd operator-(Usd a, Usd b) { return Usd(a.pico_ - b.pico_); }

  /// Exact `*this * numerator / denominator`; throws if the result is not on
  /// the 10^-12 grid or overflows.
  Usd scaled(std::int64_t numerator, std::int64_t denominator) const;
  /// `*this * numerator / denominator`, rounded half-even to the grid.
  Usd scaled_rounded(std::int64_t numerator, std::int64_t denominator) const;

  friend constexpr auto operator<=>(Usd, Usd) = default;

 private:
  constexpr explicit Usd(std::int64_t pico) : pico_(pico) {}
  std::int64_t pico_ = 0;
};

}  // namespace stayinsight
