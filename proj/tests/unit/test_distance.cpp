#include <doctest.h>

#include <cmath>
#include <queue>

#include "lsa/distance/distance.hpp"
#include "lsa/errors.hpp"
#include "lsa/util/rng.hpp"

using namespace lsa;
using namespace lsa::distance;

namespace {

const std::string kFixtures = LSA_FIXTURE_DIR;

// Random tree: word i > 0 attaches to an earlier word, then labels are permuted.
std::vector<int> random_heads(Rng& rng, std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<int> heads(n, DependencyTree::kRoot);
  for (std::size_t i = 1; i < n; ++i) {
    heads[order[i]] = static_cast<int>(order[rng.uniform_index(i)]);
  }
  return heads;
}

std::size_t bfs_distance(const std::vector<int>& heads, std::size_t from, std::size_t to) {
  const auto n = heads.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (heads[i] >= 0) {
      adj[i].push_back(static_cast<std::size_t>(heads[i]));
      adj[static_cast<std::size_t>(heads[i])].push_back(i);
    }
  }
  std::vector<std::size_t> dist(n, n + 1);
  std::queue<std::size_t> q;
  dist[from] = 0;
  q.push(from);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto v : adj[u]) {
      if (dist[v] > n) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist[to];
}

}  // namespace

TEST_CASE("relative token distance") {
  const std::vector<std::size_t> aspect = {4, 5};
  CHECK(relative_token_distance(1, aspect) == 3.5);
  const std::vector<std::size_t> single = {7};
  CHECK(relative_token_distance(7, single) == 0.0);
  CHECK_THROWS_AS(relative_token_distance(1, std::vector<std::size_t>{}), UsageError);

  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> positions(1 + rng.uniform_index(6));
    for (auto& p : positions) p = rng.uniform_index(80);
    const auto token = rng.uniform_index(80);
    double expected = 0.0;
    for (auto p : positions) expected += std::fabs(static_cast<double>(token) - static_cast<double>(p));
    expected /= static_cast<double>(positions.size());
    CHECK(relative_token_distance(token, positions) == doctest::Approx(expected).epsilon(1e-14));

    const auto shift = rng.uniform_index(100);
    auto shifted = positions;
    for (auto& p : shifted) p += shift;
    CHECK(relative_token_distance(token + shift, shifted) == relative_token_distance(token, positions));
  }
}

TEST_CASE("tree distance examples") {
  // He likes food: likes is the root.
  const auto tree = DependencyTree::from_heads({1, DependencyTree::kRoot, 1});
  CHECK(tree.root() == 1);
  CHECK(tree_shortest_distance(tree, 0, 0) == 0);
  CHECK(tree_shortest_distance(tree, 0, 2) == 2);
  CHECK(tree_shortest_distance(tree, 0, 1) == 1);
  CHECK_THROWS_AS(tree_shortest_distance(tree, 0, 3), UsageError);
}

TEST_CASE("tree validation") {
  CHECK_THROWS_AS(DependencyTree::from_heads({1, 0}), ParseError);
  CHECK_THROWS_AS(DependencyTree::from_heads({-1, -1}), ParseError);
  CHECK_THROWS_AS(DependencyTree::from_heads({0}), ParseError);
  CHECK_THROWS_AS(DependencyTree::from_heads({}), ParseError);
  CHECK_THROWS_AS(DependencyTree::from_heads({-1, 2, 3, 1}), ParseError);
  try {
    DependencyTree::from_heads({1, 0});
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("cycle") != std::string::npos);
  }
}

TEST_CASE("tree distance matches BFS on random trees") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng.uniform_index(30);
    const auto heads = random_heads(rng, n);
    const auto tree = DependencyTree::from_heads(heads);
    const auto i = rng.uniform_index(n);
    const auto j = rng.uniform_index(n);
    const auto k = rng.uniform_index(n);
    const auto dij = tree_shortest_distance(tree, i, j);
    CHECK(dij == bfs_distance(heads, i, j));
    CHECK(dij == tree_shortest_distance(tree, j, i));
    CHECK((dij == 0) == (i == j));
    CHECK(dij <= tree_shortest_distance(tree, i, k) + tree_shortest_distance(tree, k, j));
  }
}

TEST_CASE("syntactic distance") {
  const auto tree = DependencyTree::from_heads({1, DependencyTree::kRoot, 1});
  const auto identity = TokenAlignment::identity(3);
  const std::vector<std::size_t> likes_food = {1, 2};
  CHECK(syntactic_distance(tree, identity, 0, likes_food) == 1.5);
  CHECK(syntactic_distance(tree, identity, 2, std::vector<std::size_t>{2}) == 0.0);

  // Two subword tokens of "food" share the word.
  const TokenAlignment split({0, 1, 2, 2});
  CHECK(syntactic_distance(tree, split, 3, std::vector<std::size_t>{2}) == 0.0);
  CHECK(syntactic_distance(tree, split, 0, std::vector<std::size_t>{3}) == 2.0);

  CHECK_THROWS_AS(TokenAlignment({0, 2, 1}), AlignmentError);
  try {
    syntactic_distance(tree, identity, 5, likes_food);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find("token 5") != std::string::npos);
  }
  CHECK_THROWS_AS(syntactic_distance(tree, identity, 0, std::vector<std::size_t>{}), UsageError);

  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = 2 + rng.uniform_index(20);
    const auto heads = random_heads(rng, n);
    const auto tree2 = DependencyTree::from_heads(heads);
    std::vector<std::size_t> map;
    for (std::size_t w = 0; w < n; ++w) {
      const auto pieces = 1 + rng.uniform_index(3);
      for (std::size_t p = 0; p < pieces; ++p) map.push_back(w);
    }
    const TokenAlignment align(map);
    const auto token = rng.uniform_index(map.size());
    std::vector<std::size_t> aspect = {rng.uniform_index(map.size())};
    if (aspect[0] + 1 < map.size()) aspect.push_back(aspect[0] + 1);
    double expected = 0.0;
    for (auto a : aspect) expected += static_cast<double>(bfs_distance(heads, map[token], map[a]));
    expected /= static_cast<double>(aspect.size());
    CHECK(syntactic_distance(tree2, align, token, aspect) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("CoNLL-U parsing") {
  const auto parses = parse_conllu(
      "# sent_id = a\n1\tx\tx\t_\t_\t_\t2\tdep\t_\t_\n2\ty\ty\t_\t_\t_\t0\troot\t_\t_\n"
      "3\tz\tz\t_\t_\t_\t2\tdep\t_\t_\n");
  REQUIRE(parses.count("a") == 1);
  const auto& tree = parses.at("a");
  CHECK(tree.root() == 1);
  CHECK(tree.heads() == std::vector<int>{1, -1, 1});
  CHECK(tree.labels() == std::vector<std::string>{"dep", "root", "dep"});

  CHECK_THROWS_AS(parse_conllu("# sent_id = c\n1\tx\tx\t_\t_\t_\t2\tdep\t_\t_\n2\ty\ty\t_\t_\t_\t1\tdep\t_\t_\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_conllu("1\tx\tx\t_\t_\t_\t0\troot\t_\t_\n"), ParseError);
  CHECK_THROWS_AS(parse_conllu("# sent_id = r\n1\tx\tx\t_\t_\t_\t0\troot\t_\t_\n2\ty\ty\t_\t_\t_\t0\troot\t_\t_\n"),
                  ParseError);
}

TEST_CASE("bundled parse fixture") {
  const auto parses = load_parses(kFixtures + "/mini_parses.conllu");
  REQUIRE(parses.size() == 4);
  CHECK(parses.at("s1").word_count() == 11);
  CHECK(parses.at("s1").root() == 3);
  CHECK(parses.at("s6").heads() == std::vector<int>{1, 3, 3, -1, 3});
  CHECK(parses.at("s9").heads() == std::vector<int>{1, 2, -1, 2});
  // The multiword range and the empty node are skipped.
  CHECK(parses.at("mw").heads() == std::vector<int>{3, 3, 3, -1, 3});
  CHECK(tree_shortest_distance(parses.at("s6"), 0, 4) == 3);
}
