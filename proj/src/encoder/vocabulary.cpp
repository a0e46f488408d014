#include "lsa/encoder/vocabulary.hpp"

#include <algorithm>
#include <set>

#include "lsa/errors.hpp"

namespace lsa::encoder {

namespace {
const std::vector<std::string> kReservedTokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
}

Vocabulary::Vocabulary() : Vocabulary(Unchecked{}, kReservedTokens) {}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& token_lists) {
  std::set<std::string> distinct;
  for (const auto& list : token_lists) distinct.insert(list.begin(), list.end());
  std::vector<std::string> tokens = kReservedTokens;
  for (const auto& t : distinct) {
    if (std::find(kReservedTokens.begin(), kReservedTokens.end(), t) == kReservedTokens.end()) {
      tokens.push_back(t);
    }
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kReserved ||
      !std::equal(kReservedTokens.begin(), kReservedTokens.end(), tokens.begin())) {
    throw DataError("vocabulary must start with [PAD], [UNK], [CLS], [SEP]");
  }
  return Vocabulary(Unchecked{}, std::move(tokens));
}

Vocabulary::Vocabulary(Unchecked, std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw DataError("vocabulary has duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::int32_t Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw UsageError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::int32_t> build_spc_input(std::span<const std::int32_t> context,
                                          std::span<const std::int32_t> aspect,
                                          std::size_t max_len) {
  if (aspect.empty()) throw UsageError("build_spc_input: empty aspect");
  if (aspect.size() + 3 > max_len) {
    throw UsageError("build_spc_input: aspect of " + std::to_string(aspect.size()) +
                     " tokens does not fit max length " + std::to_string(max_len));
  }
  const std::size_t keep = std::min(context.size(), max_len - aspect.size() - 3);
  std::vector<std::int32_t> out;
  out.reserve(keep + aspect.size() + 3);
  out.push_back(Vocabulary::kCls);
  out.insert(out.end(), context.begin(), context.begin() + static_cast<std::ptrdiff_t>(keep));
  out.push_back(Vocabulary::kSep);
  out.insert(out.end(), aspect.begin(), aspect.end());
  out.push_back(Vocabulary::kSep);
  return out;
}

}  // namespace lsa::encoder
