#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dgt {

/// Whitespace-delimited tokens. No token is empty or contains ASCII whitespace.
using TokenSeq = std::vector<std::string>;

/// Splits on ASCII whitespace (space, tab, CR, LF, VT, FF).
TokenSeq split_tokens(std::string_view text);
std::string join_tokens(const TokenSeq& tokens);

/// `<X>` with at least one inner character and no whitespace or nested brackets.
bool is_special_token(std::string_view token);

/// True for a non-empty run of ASCII digits.
bool is_number_token(std::string_view token);

void append(TokenSeq& dst, const TokenSeq& src);

}  // namespace dgt
