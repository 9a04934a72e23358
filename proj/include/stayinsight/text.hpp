#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stayinsight::text {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Number of Unicode code points in a UTF-8 string (continuation bytes are
/// not counted; invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

/// Collapses runs of ASCII whitespace into single spaces and trims.
std::string collapse_whitespace(std::string_view s);

/// Lowercased word tokens: maximal runs of letters/digits. Non-ASCII UTF-8
/// sequences are treated as letters; ASCII is lowercased.
std::vector<std::string> word_tokens(std::string_view s);

}  // namespace stayinsight::text
