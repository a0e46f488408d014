#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lsa/corpus/types.hpp"

namespace lsa::training {

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<double, corpus::kNumPolarities> precision{};
  std::array<double, corpus::kNumPolarities> recall{};
  std::array<double, corpus::kNumPolarities> f1{};
  std::size_t n_examples = 0;  // classification pairs
};

// Accuracy and per-class precision / recall / F1; any 0/0 is taken as 0.
// Macro-F1 averages all three classes, absent ones included.
// DataError when empty, UsageError when lengths differ or a label is out of range.
Metrics compute_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> predicted);

// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);
double median(const std::vector<double>& values);
double iqr(const std::vector<double>& values);

// Subset of classification pairs an evaluation is restricted to.
struct Slice {
  enum class Kind { kAll, kImplicit, kMono, kCluster };
  Kind kind = Kind::kAll;
  std::size_t cluster_bucket = 0;  // 1..4, or 5 for clusters of five and more

  // "all" | "implicit" | "mono" | "cluster1" .. "cluster5" (5 = five or more)
  static Slice parse(const std::string& text);
  std::string name() const;
};

}  // namespace lsa::training
