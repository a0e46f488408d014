#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace lsa::encoder {

// Token <-> id map with dense ids. The first four ids are reserved:
//   0 [PAD]   1 [UNK]   2 [CLS]   3 [SEP]
class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kCls = 2;
  static constexpr std::int32_t kSep = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  // Reserved ids followed by every distinct token, sorted bytewise.
  static Vocabulary build(const std::vector<std::vector<std::string>>& token_lists);
  // Restores a vocabulary from its id-ordered token list (reserved entries included).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::int32_t id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  const std::string& token(std::int32_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  struct Unchecked {};
  Vocabulary(Unchecked, std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

// [CLS] context [SEP] aspect [SEP]. When too long, the context is truncated from
// the right; the aspect is never cut. Throws UsageError for an empty aspect or an
// aspect that alone does not fit.
std::vector<std::int32_t> build_spc_input(std::span<const std::int32_t> context,
                                          std::span<const std::int32_t> aspect,
                                          std::size_t max_len);

}  // namespace lsa::encoder
