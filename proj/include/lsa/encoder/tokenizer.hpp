#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lsa::encoder {

struct TokenSpan {
  std::string text;   // lowercased token
  std::size_t begin;  // byte offsets into the source text, [begin, end)
  std::size_t end;
};

// Lowercases ASCII letters, splits on whitespace and makes every ASCII
// punctuation character a token of its own. Non-ASCII bytes are kept verbatim.
std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace lsa::encoder
