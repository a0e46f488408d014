#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lsa::distance {

// Mean absolute offset between a token position and the aspect's token positions.
double relative_token_distance(std::size_t token_pos, std::span<const std::size_t> aspect_positions);

class DependencyTree {
 public:
  static constexpr int kRoot = -1;

  // heads[i] is the 0-based head word of word i, or kRoot. Validates that there
  // is exactly one root and that the head links are acyclic (ParseError).
  static DependencyTree from_heads(std::vector<int> heads, std::vector<std::string> labels = {});

  std::size_t word_count() const { return heads_.size(); }
  int head(std::size_t word) const { return heads_.at(word); }
  std::size_t root() const { return root_; }
  std::size_t depth(std::size_t word) const { return depth_.at(word); }
  const std::vector<int>& heads() const { return heads_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<int> heads_;
  std::vector<std::string> labels_;
  std::vector<std::size_t> depth_;
  std::size_t root_ = 0;
};

// Edges on the unique tree path between two words.
std::size_t tree_shortest_distance(const DependencyTree& tree, std::size_t word_i, std::size_t word_j);

// Model-token -> source-word map; monotone non-decreasing, every token mapped.
class TokenAlignment {
 public:
  TokenAlignment() = default;
  // Throws AlignmentError if `token_to_word` decreases anywhere.
  explicit TokenAlignment(std::vector<std::size_t> token_to_word);
  static TokenAlignment identity(std::size_t tokens);

  std::size_t token_count() const { return token_to_word_.size(); }
  // Throws AlignmentError naming the token when it is not covered.
  std::size_t word_of(std::size_t token) const;

 private:
  std::vector<std::size_t> token_to_word_;
};

// Mean tree distance between the word of `token` and the words of the aspect
// tokens. Tokens sharing a word with an aspect token contribute 0.
double syntactic_distance(const DependencyTree& tree, const TokenAlignment& alignment,
                          std::size_t token, std::span<const std::size_t> aspect_tokens);

// CoNLL-U subset: ID, FORM and HEAD columns, "# sent_id = <ref>" comments.
// Multiword ranges ("3-4") and empty nodes ("3.1") are skipped.
using ParseMap = std::map<std::string, DependencyTree>;
ParseMap parse_conllu(const std::string& text, const std::string& source = "<conllu>");
ParseMap load_parses(const std::filesystem::path& path);

}  // namespace lsa::distance
