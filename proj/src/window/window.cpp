#include "lsa/window/window.hpp"

#include <algorithm>
#include <string>

#include "lsa/corpus/analysis.hpp"
#include "lsa/errors.hpp"

namespace lsa::window {

using ad::Tensor;

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kSpc: return "lsa_p";
    case Variant::kToken: return "lsa_t";
    case Variant::kSyntax: return "lsa_s";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "lsa_p") return Variant::kSpc;
  if (lower == "lsa_t") return Variant::kToken;
  if (lower == "lsa_s") return Variant::kSyntax;
  throw UsageError("unknown variant '" + std::string(name) + "' (expected lsa_p, lsa_t or lsa_s)");
}

double position_weight(double distance, double alpha, std::size_t n) {
  if (distance <= alpha) return 1.0;
  return std::max(0.0, 1.0 - (distance - alpha) / static_cast<double>(n));
}

namespace {

std::vector<std::size_t> aspect_positions(const corpus::AspectAnnotation& aspect) {
  std::vector<std::size_t> out;
  for (std::size_t p = aspect.start; p < aspect.end; ++p) out.push_back(p);
  return out;
}

}  // namespace

std::vector<double> positional_distances(std::size_t context_length, const corpus::AspectAnnotation& aspect) {
  const auto positions = aspect_positions(aspect);
  const double n = static_cast<double>(context_length);
  std::vector<double> out(context_length + 2, n);
  for (std::size_t i = 0; i < context_length; ++i) {
    out[i + 1] = distance::relative_token_distance(i, positions);
  }
  return out;
}

std::vector<double> syntactic_distances(std::size_t context_length, const corpus::AspectAnnotation& aspect,
                                        const distance::DependencyTree& tree,
                                        const distance::TokenAlignment& alignment) {
  const auto positions = aspect_positions(aspect);
  const double n = static_cast<double>(context_length);
  std::vector<double> out(context_length + 2, n);
  for (std::size_t i = 0; i < context_length; ++i) {
    out[i + 1] = distance::syntactic_distance(tree, alignment, i, positions);
  }
  return out;
}

std::vector<double> position_weights(std::span<const double> distances, double alpha, std::size_t n) {
  std::vector<double> out(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) out[i] = position_weight(distances[i], alpha, n);
  return out;
}

Tensor aspect_feature_local(const encoder::SelfAttentionBlock& block, const Tensor& context_states,
                            std::span<const double> weights) {
  if (weights.size() != context_states.rows()) {
    throw DimensionError("aspect feature: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(context_states.rows()) + " hidden states");
  }
  return block.forward_head(ad::scale_rows(context_states, weights));
}

Tensor aspect_feature_spc(const encoder::Encoder& encoder, const encoder::SelfAttentionBlock& block,
                          std::span<const std::int32_t> spc_ids) {
  return block.forward_head(encoder.encode(spc_ids));
}

AggregationWindow build_window(const corpus::Example& example, std::size_t target,
                               std::span<const Tensor> features, std::size_t k) {
  if (features.size() != example.aspects.size()) {
    throw DimensionError("window: " + std::to_string(features.size()) + " features for " +
                         std::to_string(example.aspects.size()) + " aspects");
  }
  const auto neighbors = corpus::adjacent_aspects(example, target, k);
  AggregationWindow w;
  w.target = features[target];
  // Left slots run farthest..nearest; missing ones sit on the far side.
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t missing = k - neighbors.left.size();
    if (s < missing) {
      w.left.push_back(w.target);
      w.left_padded.push_back(true);
    } else {
      w.left.push_back(features[neighbors.left[s - missing]]);
      w.left_padded.push_back(false);
    }
  }
  for (std::size_t s = 0; s < k; ++s) {
    if (s < neighbors.right.size()) {
      w.right.push_back(features[neighbors.right[s]]);
      w.right_padded.push_back(false);
    } else {
      w.right.push_back(w.target);
      w.right_padded.push_back(true);
    }
  }
  return w;
}

AggregationWindow target_only_window(const Tensor& target, std::size_t k) {
  AggregationWindow w;
  w.target = target;
  w.left.assign(k, target);
  w.right.assign(k, target);
  w.left_padded.assign(k, true);
  w.right_padded.assign(k, true);
  return w;
}

namespace {

Tensor weigh(const Tensor& slot, bool padded, const Tensor* eta, double fixed) {
  if (padded) return slot;
  if (eta) return ad::scale(slot, *eta);
  return ad::scale(slot, fixed);
}

}  // namespace

Tensor apply_dwa(const AggregationWindow& window, const DwaWeights& weights, WindowSides sides) {
  std::vector<Tensor> parts;
  if (sides != WindowSides::kRightOnly) {
    for (std::size_t s = 0; s < window.left.size(); ++s) {
      parts.push_back(weigh(window.left[s], window.left_padded[s], weights.eta_l, weights.static_l));
    }
  }
  parts.push_back(window.target);
  if (sides != WindowSides::kLeftOnly) {
    for (std::size_t s = 0; s < window.right.size(); ++s) {
      parts.push_back(weigh(window.right[s], window.right_padded[s], weights.eta_r, weights.static_r));
    }
  }
  return ad::concat(parts);
}

Tensor project_window(const Tensor& aggregated, const Tensor& wo, const Tensor& bo) {
  return ad::linear(aggregated, wo, bo);
}

Tensor logits(const Tensor& projected, const Tensor& global, const Tensor& wd, const Tensor& bd) {
  const Tensor features = global.defined() ? ad::concat({projected, global}) : projected;
  return ad::linear(features, wd, bd);
}

Tensor classify(const Tensor& projected, const Tensor& global, const Tensor& wd, const Tensor& bd) {
  return ad::softmax(logits(projected, global, wd, bd));
}

}  // namespace lsa::window
