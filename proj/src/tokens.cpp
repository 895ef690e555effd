#include "dgt/tokens.hpp"

namespace dgt {

namespace {
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}
}  // namespace

TokenSeq split_tokens(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool is_special_token(std::string_view t) {
  if (t.size() < 3 || t.front() != '<' || t.back() != '>') return false;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (t[i] == '<' || t[i] == '>' || is_space(t[i])) return false;
  }
  return true;
}

bool is_number_token(std::string_view t) {
  if (t.empty()) return false;
  for (char c : t) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

void append(TokenSeq& dst, const TokenSeq& src) { dst.insert(dst.end(), src.begin(), src.end()); }

}  // namespace dgt
