#pragma once

#include <string>
#include <string_view>

#include "dgt/tokens.hpp"

namespace dgt {

inline constexpr std::string_view kTitleTag = "<T>";
inline constexpr std::string_view kUpperTag = "<U>";

/// Lowercases Titlecase and ALL-CAPS tokens and appends `<T>` / `<U>` after
/// them. Lowercase and other mixed-case tokens are kept verbatim.
TokenSeq apply_inline_casing(const TokenSeq& seq);

/// Inverse of apply_inline_casing. Throws Error on a case tag with no word before it.
TokenSeq revert_inline_casing(const TokenSeq& seq);

// Case mapping over ASCII, Latin-1, Latin Extended-A, basic Greek and Cyrillic.
std::string to_lower_utf8(std::string_view s);
std::string to_upper_utf8(std::string_view s);
std::string upper_first_utf8(std::string_view s);

}  // namespace dgt
