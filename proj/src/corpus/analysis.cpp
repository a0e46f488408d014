#include "lsa/corpus/analysis.hpp"

#include <algorithm>

#include "lsa/errors.hpp"

namespace lsa::corpus {

Neighbors adjacent_aspects(const Example& example, std::size_t target, std::size_t k) {
  const std::size_t m = example.aspects.size();
  if (target >= m) {
    throw UsageError("adjacent_aspects: target " + std::to_string(target) + " out of range for " +
                     std::to_string(m) + " aspects");
  }
  if (k == 0) throw UsageError("adjacent_aspects: k must be at least 1");
  Neighbors out;
  for (std::size_t i = target >= k ? target - k : 0; i < target; ++i) out.left.push_back(i);
  for (std::size_t i = target + 1; i < m && i <= target + k; ++i) out.right.push_back(i);
  return out;
}

std::size_t ClusterHistogram::bucket_for_size(std::size_t cluster_size) {
  return std::min(cluster_size, kClusterBuckets) - 1;
}

std::vector<std::size_t> cluster_sizes(const Example& example) {
  const auto& aspects = example.aspects;
  std::vector<std::size_t> sizes(aspects.size());
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= aspects.size(); ++i) {
    if (i == aspects.size() || aspects[i].polarity != aspects[run_start].polarity) {
      std::fill(sizes.begin() + run_start, sizes.begin() + i, i - run_start);
      run_start = i;
    }
  }
  return sizes;
}

ClusterHistogram cluster_histogram(const Dataset& dataset) {
  ClusterHistogram h;
  for (const auto& ex : dataset.examples) {
    for (auto size : cluster_sizes(ex)) {
      ++h.counts[ClusterHistogram::bucket_for_size(size)];
      ++h.sum;
    }
  }
  return h;
}

std::string cluster_histogram_csv(const ClusterHistogram& histogram) {
  std::string out = "size,count\n";
  for (std::size_t b = 0; b < kClusterBuckets; ++b) {
    out += (b + 1 == kClusterBuckets ? std::string(">=5") : std::to_string(b + 1)) + "," +
           std::to_string(histogram.counts[b]) + "\n";
  }
  return out;
}

}  // namespace lsa::corpus
