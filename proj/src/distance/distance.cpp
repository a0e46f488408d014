#include "lsa/distance/distance.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "lsa/errors.hpp"
#include "lsa/util/keyvalue.hpp"

namespace lsa::distance {

double relative_token_distance(std::size_t token_pos, std::span<const std::size_t> aspect_positions) {
  if (aspect_positions.empty()) throw UsageError("relative_token_distance: empty aspect");
  double total = 0.0;
  for (auto p : aspect_positions) {
    total += static_cast<double>(token_pos > p ? token_pos - p : p - token_pos);
  }
  return total / static_cast<double>(aspect_positions.size());
}

DependencyTree DependencyTree::from_heads(std::vector<int> heads, std::vector<std::string> labels) {
  const std::size_t n = heads.size();
  if (n == 0) throw ParseError("dependency tree has no words");
  if (!labels.empty() && labels.size() != n) throw ParseError("label count differs from word count");
  DependencyTree t;
  std::size_t roots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (heads[i] == kRoot) {
      ++roots;
      t.root_ = i;
    } else if (heads[i] < 0 || static_cast<std::size_t>(heads[i]) >= n) {
      throw ParseError("word " + std::to_string(i + 1) + " has head " + std::to_string(heads[i] + 1) +
                       " outside the sentence");
    } else if (static_cast<std::size_t>(heads[i]) == i) {
      throw ParseError("cycle: word " + std::to_string(i + 1) + " is its own head");
    }
  }
  if (roots == 0) throw ParseError("cycle: no root word");
  if (roots > 1) throw ParseError("multiple roots (" + std::to_string(roots) + ")");

  // Depth by walking up; a walk longer than n steps means a cycle.
  constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);
  t.depth_.assign(n, kUnknown);
  t.depth_[t.root_] = 0;
  std::vector<std::size_t> path;
  for (std::size_t i = 0; i < n; ++i) {
    path.clear();
    std::size_t cur = i;
    while (t.depth_[cur] == kUnknown) {
      path.push_back(cur);
      if (path.size() > n) {
        throw ParseError("cycle in head links through word " + std::to_string(i + 1));
      }
      cur = static_cast<std::size_t>(heads[cur]);
    }
    std::size_t d = t.depth_[cur];
    for (auto it = path.rbegin(); it != path.rend(); ++it) t.depth_[*it] = ++d;
  }
  t.heads_ = std::move(heads);
  t.labels_ = std::move(labels);
  return t;
}

std::size_t tree_shortest_distance(const DependencyTree& tree, std::size_t word_i, std::size_t word_j) {
  const std::size_t n = tree.word_count();
  if (word_i >= n || word_j >= n) {
    throw UsageError("tree_shortest_distance: word index out of range for " + std::to_string(n) +
                     " words");
  }
  std::size_t a = word_i, b = word_j, edges = 0;
  while (tree.depth(a) > tree.depth(b)) a = static_cast<std::size_t>(tree.head(a)), ++edges;
  while (tree.depth(b) > tree.depth(a)) b = static_cast<std::size_t>(tree.head(b)), ++edges;
  while (a != b) {
    a = static_cast<std::size_t>(tree.head(a));
    b = static_cast<std::size_t>(tree.head(b));
    edges += 2;
  }
  return edges;
}

TokenAlignment::TokenAlignment(std::vector<std::size_t> token_to_word)
    : token_to_word_(std::move(token_to_word)) {
  for (std::size_t i = 1; i < token_to_word_.size(); ++i) {
    if (token_to_word_[i] < token_to_word_[i - 1]) {
      throw AlignmentError("token alignment decreases at token " + std::to_string(i));
    }
  }
}

TokenAlignment TokenAlignment::identity(std::size_t tokens) {
  std::vector<std::size_t> map(tokens);
  for (std::size_t i = 0; i < tokens; ++i) map[i] = i;
  return TokenAlignment(std::move(map));
}

std::size_t TokenAlignment::word_of(std::size_t token) const {
  if (token >= token_to_word_.size()) {
    throw AlignmentError("token " + std::to_string(token) + " is not covered by the alignment (" +
                         std::to_string(token_to_word_.size()) + " tokens aligned)");
  }
  return token_to_word_[token];
}

double syntactic_distance(const DependencyTree& tree, const TokenAlignment& alignment,
                          std::size_t token, std::span<const std::size_t> aspect_tokens) {
  if (aspect_tokens.empty()) throw UsageError("syntactic_distance: empty aspect");
  const std::size_t word = alignment.word_of(token);
  double total = 0.0;
  for (auto a : aspect_tokens) {
    total += static_cast<double>(tree_shortest_distance(tree, word, alignment.word_of(a)));
  }
  return total / static_cast<double>(aspect_tokens.size());
}

namespace {

bool parse_size(const std::string& s, std::size_t& out) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return false;
  out = std::stoul(s);
  return true;
}

}  // namespace

ParseMap parse_conllu(const std::string& text, const std::string& source) {
  ParseMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0, sentence_line = 0;
  std::optional<std::string> sent_id;
  std::vector<int> heads;
  std::vector<std::string> labels;

  auto flush = [&] {
    if (heads.empty() && !sent_id) return;
    const std::string where = source + ":" + std::to_string(sentence_line);
    if (!sent_id) throw ParseError(where + ": sentence without '# sent_id'");
    if (heads.empty()) throw ParseError(where + ": sentence '" + *sent_id + "' has no words");
    try {
      auto tree = DependencyTree::from_heads(std::move(heads), std::move(labels));
      if (!out.emplace(*sent_id, std::move(tree)).second) {
        throw ParseError("duplicate sent_id '" + *sent_id + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError(where + ": sentence '" + *sent_id + "': " + e.what());
    }
    heads.clear();
    labels.clear();
    sent_id.reset();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (heads.empty() && !sent_id) sentence_line = lineno;
    if (line[0] == '#') {
      const std::string key = "# sent_id = ";
      if (line.rfind(key, 0) == 0) sent_id = line.substr(key.size());
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, '\t')) cols.push_back(col);
    const std::string where = source + ":" + std::to_string(lineno);
    if (cols.size() < 7) throw ParseError(where + ": expected at least 7 tab-separated columns");
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    std::size_t id = 0, head = 0;
    if (!parse_size(cols[0], id)) throw ParseError(where + ": bad ID '" + cols[0] + "'");
    if (id != heads.size() + 1) {
      throw ParseError(where + ": missing or out-of-order ID, expected " +
                       std::to_string(heads.size() + 1) + " got " + cols[0]);
    }
    if (!parse_size(cols[6], head)) throw ParseError(where + ": bad HEAD '" + cols[6] + "'");
    heads.push_back(static_cast<int>(head) - 1);  // 0 (ROOT) -> kRoot
    labels.push_back(cols.size() > 7 ? cols[7] : "_");
  }
  flush();
  return out;
}

ParseMap load_parses(const std::filesystem::path& path) {
  return parse_conllu(read_file(path), path.string());
}

}  // namespace lsa::distance
