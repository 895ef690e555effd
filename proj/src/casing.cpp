#include "dgt/casing.hpp"

#include "dgt/error.hpp"
#include "utf8.hpp"

namespace dgt {

namespace {

constexpr char32_t kNone = 0;

// Simple one-to-one case pairs only; characters outside these ranges are
// treated as uncased.
char32_t lower_of(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x137 && c != 0x130 && c % 2 == 0) return c + 1;
  if (c >= 0x139 && c <= 0x148 && c % 2 == 1) return c + 1;
  if (c >= 0x14A && c <= 0x177 && c % 2 == 0) return c + 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E && c % 2 == 1) return c + 1;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return kNone;
}

char32_t upper_of(char32_t c) {
  if (c >= 'a' && c <= 'z') return c - 32;
  if (c >= 0xE0 && c <= 0xFE && c != 0xF7) return c - 32;
  if (c == 0xFF) return 0x178;
  if (c >= 0x101 && c <= 0x137 && c != 0x131 && c % 2 == 1) return c - 1;
  if (c >= 0x13A && c <= 0x148 && c % 2 == 0) return c - 1;
  if (c >= 0x14B && c <= 0x177 && c % 2 == 1) return c - 1;
  if (c >= 0x17A && c <= 0x17E && c % 2 == 0) return c - 1;
  if (c >= 0x3B1 && c <= 0x3C9 && c != 0x3C2) return c - 32;
  if (c >= 0x430 && c <= 0x44F) return c - 32;
  if (c >= 0x450 && c <= 0x45F) return c - 80;
  return kNone;
}

template <class Fn>
std::string map_code_points(std::string_view s, Fn fn) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  std::size_t index = 0;
  while (i < s.size()) {
    const std::size_t n = utf8::sequence_length(s, i);
    const char32_t cp = utf8::decode(s, i, n);
    const char32_t mapped = cp == 0xFFFFFFFF ? kNone : fn(cp, index);
    if (mapped == kNone) {
      out.append(s.substr(i, n));
    } else {
      utf8::encode(mapped, out);
    }
    i += n;
    ++index;
  }
  return out;
}

enum class Shape { Lower, Title, Upper, Mixed };

Shape shape_of(std::string_view s) {
  std::size_t length = 0;
  std::size_t uppers = 0;
  std::size_t lowers = 0;
  bool first_upper = false;
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t n = utf8::sequence_length(s, i);
    const char32_t cp = utf8::decode(s, i, n);
    if (cp != 0xFFFFFFFF) {
      if (lower_of(cp) != kNone) {
        ++uppers;
        if (length == 0) first_upper = true;
      } else if (upper_of(cp) != kNone) {
        ++lowers;
      }
    }
    i += n;
    ++length;
  }
  if (uppers == 0) return Shape::Lower;
  if (first_upper && uppers == 1) return Shape::Title;
  if (lowers == 0 && length > 1) return Shape::Upper;
  return Shape::Mixed;
}

}  // namespace

std::string to_lower_utf8(std::string_view s) {
  return map_code_points(s, [](char32_t c, std::size_t) { return lower_of(c); });
}

std::string to_upper_utf8(std::string_view s) {
  return map_code_points(s, [](char32_t c, std::size_t) { return upper_of(c); });
}

std::string upper_first_utf8(std::string_view s) {
  return map_code_points(s, [](char32_t c, std::size_t i) { return i == 0 ? upper_of(c) : kNone; });
}

TokenSeq apply_inline_casing(const TokenSeq& seq) {
  TokenSeq out;
  out.reserve(seq.size());
  for (const auto& tok : seq) {
    if (is_special_token(tok)) {
      out.push_back(tok);
      continue;
    }
    switch (shape_of(tok)) {
      case Shape::Title:
        out.push_back(to_lower_utf8(tok));
        out.emplace_back(kTitleTag);
        break;
      case Shape::Upper:
        out.push_back(to_lower_utf8(tok));
        out.emplace_back(kUpperTag);
        break;
      case Shape::Lower:
      case Shape::Mixed:
        out.push_back(tok);
        break;
    }
  }
  return out;
}

TokenSeq revert_inline_casing(const TokenSeq& seq) {
  TokenSeq out;
  out.reserve(seq.size());
  bool have_word = false;  // last output token is a word a case tag may apply to
  for (const auto& tok : seq) {
    if (tok == kTitleTag || tok == kUpperTag) {
      if (!have_word) throw Error("case tag " + tok + " has no preceding word");
      out.back() = tok == kTitleTag ? upper_first_utf8(out.back()) : to_upper_utf8(out.back());
      have_word = false;
      continue;
    }
    out.push_back(tok);
    have_word = !is_special_token(tok);
  }
  return out;
}

}  // namespace dgt
