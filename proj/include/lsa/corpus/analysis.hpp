#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "lsa/corpus/types.hpp"

namespace lsa::corpus {

struct Neighbors {
  std::vector<std::size_t> left;   // aspect indices, nearest last
  std::vector<std::size_t> right;  // aspect indices, nearest first
};

// The k aspects immediately before and after `target` within one example.
Neighbors adjacent_aspects(const Example& example, std::size_t target, std::size_t k);

inline constexpr std::size_t kClusterBuckets = 5;  // sizes 1, 2, 3, 4, >=5

struct ClusterHistogram {
  std::array<std::size_t, kClusterBuckets> counts{};
  std::size_t sum = 0;

  static std::size_t bucket_for_size(std::size_t cluster_size);
  bool operator==(const ClusterHistogram&) const = default;
};

// Per example, maximal runs of consecutive same-polarity aspects form clusters;
// every aspect is counted in the bucket of its cluster's size.
ClusterHistogram cluster_histogram(const Dataset& dataset);
// Cluster size of every aspect of `example`, in aspect order.
std::vector<std::size_t> cluster_sizes(const Example& example);

// "size,count" CSV with header, rows 1..4 and ">=5".
std::string cluster_histogram_csv(const ClusterHistogram& histogram);

}  // namespace lsa::corpus
