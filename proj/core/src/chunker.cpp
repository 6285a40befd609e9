#include <string_view>

#include "xdlate/llm.hpp"

namespace xdlate::llm {

std::size_t estimate_tokens(std::string_view text) {
  return (text.size() + 3) / 4;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_utf8_continuation(unsigned char c) { return (c & 0xc0) == 0x80; }

// Best split position in (0, limit], searched backwards. Boundary quality:
// right after a blank line > right after sentence punctuation+space > right
// after any whitespace > byte limit (backed off to a UTF-8 boundary).
std::size_t split_point(std::string_view text, std::size_t limit) {
  std::size_t whitespace = 0, sentence = 0, paragraph = 0;
  for (std::size_t p = limit; p >= 2; --p) {
    const char prev = text[p - 1];
    if (paragraph == 0 && prev == '\n' && text[p - 2] == '\n') paragraph = p;
    if (sentence == 0 && is_space(prev) &&
        (text[p - 2] == '.' || text[p - 2] == '!' || text[p - 2] == '?')) {
      sentence = p;
    }
    if (whitespace == 0 && is_space(prev)) whitespace = p;
    if (paragraph != 0) break;
  }
  if (paragraph != 0) return paragraph;
  if (sentence != 0) return sentence;
  if (whitespace != 0) return whitespace;
  std::size_t p = limit;
  while (p > 1 && is_utf8_continuation(static_cast<unsigned char>(text[p]))) --p;
  return p;
}

}  // namespace

std::vector<std::string> chunk_text(std::string_view text, std::size_t max_tokens) {
  std::vector<std::string> chunks;
  if (max_tokens == 0) max_tokens = 1;
  const std::size_t limit = max_tokens * 4;
  std::string_view rest = text;
  while (rest.size() > limit) {
    const std::size_t cut = split_point(rest, limit);
    chunks.emplace_back(rest.substr(0, cut));
    rest.remove_prefix(cut);
  }
  if (!rest.empty() || chunks.empty()) chunks.emplace_back(rest);
  return chunks;
}

}  // namespace xdlate::llm
