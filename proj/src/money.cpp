#include "stayinsight/money.hpp"

#include <cstdlib>
#include <limits>

#include "stayinsight/error.hpp"

namespace stayinsight {

namespace {

__extension__ typedef __int128 Wide;

std::int64_t narrow(Wide value) {
  if (value > std::numeric_limits<std::int64_t>::max() ||
      value < std::numeric_limits<std::int64_t>::min()) {
    throw Error(ErrorCode::InvalidArgument, "USD amount overflow");
  }
  return static_cast<std::int64_t>(value);
}

Wide round_half_even(Wide numerator, Wide denominator) {
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  Wide q = numerator / denominator;
  Wide r = numerator % denominator;
  if (r < 0) {
    r += denominator;
    q -= 1;
  }
  const Wide twice = 2 * r;
  if (twice > denominator || (twice == denominator && (q % 2 != 0))) q += 1;
  return q;
}

}  // namespace

Usd Usd::parse(std::string_view text) {
  auto bad = [&] {
    return Error(ErrorCode::InvalidArgument, "not a decimal USD amount: '" + std::string(text) + "'");
  };
  if (text.empty()) throw bad();
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  Wide units = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.') {
      if (seen_dot) throw bad();
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw bad();
    seen_digit = true;
    if (seen_dot && ++frac_digits > kScaleDigits) throw bad();
    units = units * 10 + (c - '0');
    if (units > Wide(std::numeric_limits<std::int64_t>::max())) throw bad();
  }
  if (!seen_digit) throw bad();
  for (int d = frac_digits; d < kScaleDigits; ++d) units *= 10;
  return Usd(narrow(negative ? -units : units));
}

std::string Usd::to_string() const {
  std::string out = display(kScaleDigits);
  while (out.back() == '0' && out.size() - out.find('.') > 3) out.pop_back();
  return out;
}

std::string Usd::display(int digits) const {
  if (digits < 0 || digits > kScaleDigits) {
    throw Error(ErrorCode::InvalidArgument, "display digits out of range");
  }
  Wide divisor = 1;
  for (int d = digits; d < kScaleDigits; ++d) divisor *= 10;
  Wide units = round_half_even(pico_, divisor);
  const bool negative = units < 0;
  if (negative) units = -units;
  Wide unit_scale = 1;
  for (int d = 0; d < digits; ++d) unit_scale *= 10;
  const auto whole_part = static_cast<std::int64_t>(units / unit_scale);
  auto frac_part = static_cast<std::int64_t>(units % unit_scale);
  std::string out = negative ? "-" : "";
  out += std::to_string(whole_part);
  if (digits > 0) {
    std::string frac = std::to_string(frac_part);
    out += '.';
    out += std::string(static_cast<std::size_t>(digits) - frac.size(), '0');
    out += frac;
  }
  return out;
}

Usd& Usd::operator+=(Usd other) {
  pico_ = narrow(Wide(pico_) + other.pico_);
  return *this;
}

Usd Usd::scaled(std::int64_t numerator, std::int64_t denominator) const {
  if (denominator == 0) throw Error(ErrorCode::InvalidArgument, "division by zero");
  const Wide product = Wide(pico_) * numerator;
  if (product % denominator != 0) {
    throw Error(ErrorCode::InvalidArgument, "USD amount not representable on the 1e-12 grid");
  }
  return Usd(narrow(product / denominator));
}

Usd Usd::scaled_rounded(std::int64_t numerator, std::int64_t denominator) const {
  if (denominator == 0) throw Error(ErrorCode::InvalidArgument, "division by zero");
  return Usd(narrow(round_half_even(Wide(pico_) * numerator, denominator)));
}

}  // namespace stayinsight
