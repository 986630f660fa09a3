#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace slalom {

namespace detail {

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool is_edge_punct(unsigned char c) {
  return c < 0x80 && ((c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
                      (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e));
}

}  // namespace detail

// Splits on ASCII whitespace, lowercases, and strips punctuation from both
// token edges ("Well," -> "well", "don't" stays intact). Tokens that are pure
// punctuation vanish. Lowercasing covers ASCII only; multibyte UTF-8
// sequences pass through untouched.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(text[i])) ++i;
    std::size_t begin = i;
    while (i < text.size() && !detail::is_space(text[i])) ++i;
    std::size_t end = i;
    while (begin < end && detail::is_edge_punct(text[begin])) ++begin;
    while (end > begin && detail::is_edge_punct(text[end - 1])) --end;
    if (begin == end) continue;
    std::string token(text.substr(begin, end - begin));
    for (auto& c : token) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

inline std::size_t word_count(std::string_view text) {
  return tokenize(text).size();
}

}  // namespace slalom
