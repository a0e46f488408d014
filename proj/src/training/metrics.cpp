#include "lsa/training/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lsa/errors.hpp"

namespace lsa::training {

Metrics compute_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> predicted) {
  if (gold.size() != predicted.size()) {
    throw UsageError("metrics: " + std::to_string(gold.size()) + " gold labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  if (gold.empty()) throw DataError("metrics: no classification pairs to score");
  constexpr std::size_t C = corpus::kNumPolarities;
  std::array<std::array<std::size_t, C>, C> confusion{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= C || predicted[i] >= C) throw UsageError("metrics: label out of range");
    ++confusion[gold[i]][predicted[i]];
  }
  Metrics m;
  m.n_examples = gold.size();
  std::size_t correct = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t tp = confusion[c][c];
    std::size_t pred_c = 0, gold_c = 0;
    for (std::size_t o = 0; o < C; ++o) {
      pred_c += confusion[o][c];
      gold_c += confusion[c][o];
    }
    correct += tp;
    m.precision[c] = pred_c ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
    m.recall[c] = gold_c ? static_cast<double>(tp) / static_cast<double>(gold_c) : 0.0;
    const double denom = m.precision[c] + m.recall[c];
    m.f1[c] = denom > 0 ? 2 * m.precision[c] * m.recall[c] / denom : 0.0;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  m.macro_f1 = (m.f1[0] + m.f1[1] + m.f1[2]) / static_cast<double>(C);
  return m;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(const std::vector<double>& values) { return quantile(values, 0.5); }

double iqr(const std::vector<double>& values) {
  return quantile(values, 0.75) - quantile(values, 0.25);
}

Slice Slice::parse(const std::string& text) {
  Slice s;
  if (text == "all") return s;
  if (text == "implicit") {
    s.kind = Kind::kImplicit;
    return s;
  }
  if (text == "mono") {
    s.kind = Kind::kMono;
    return s;
  }
  if (text.size() == 8 && text.rfind("cluster", 0) == 0 && text[7] >= '1' && text[7] <= '5') {
    s.kind = Kind::kCluster;
    s.cluster_bucket = static_cast<std::size_t>(text[7] - '0');
    return s;
  }
  throw UsageError("unknown slice '" + text + "' (all, implicit, mono, cluster1..cluster5)");
}

std::string Slice::name() const {
  switch (kind) {
    case Kind::kAll: return "all";
    case Kind::kImplicit: return "implicit";
    case Kind::kMono: return "mono";
    case Kind::kCluster: return "cluster" + std::to_string(cluster_bucket);
  }
  return "?";
}

}  // namespace lsa::training
