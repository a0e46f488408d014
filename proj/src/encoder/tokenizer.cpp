#include "lsa/encoder/tokenizer.hpp"

#include <cctype>

namespace lsa::encoder {

namespace {

bool is_space(unsigned char c) { return c < 0x80 && std::isspace(c); }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

}  // namespace

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_punct(c)) {
      out.push_back({std::string(1, static_cast<char>(c)), i, i + 1});
      ++i;
    } else {
      const std::size_t start = i;
      std::string word;
      while (i < text.size()) {
        const auto ch = static_cast<unsigned char>(text[i]);
        if (is_space(ch) || is_punct(ch)) break;
        word.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
        ++i;
      }
      out.push_back({std::move(word), start, i});
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace lsa::encoder
