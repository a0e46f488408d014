#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lsa/autodiff/ops.hpp"
#include "lsa/corpus/types.hpp"
#include "lsa/distance/distance.hpp"
#include "lsa/encoder/transformer.hpp"

namespace lsa::window {

inline constexpr double kDefaultAlpha = 3.0;

enum class Variant { kSpc, kToken, kSyntax };  // LSA_P, LSA_T, LSA_S

std::string_view variant_name(Variant v);  // "lsa_p" | "lsa_t" | "lsa_s"
Variant parse_variant(std::string_view name);  // UsageError on anything else

// Which neighbour sides enter the window.
enum class WindowSides { kBoth, kLeftOnly, kRightOnly };

// 1 within alpha of the aspect, then a linear decay over the context length n,
// floored at 0.
double position_weight(double distance, double alpha, std::size_t n);

// Distances for every position of "[CLS] ctx [SEP]": the context tokens get the
// positional (or tree) distance to the aspect, the two markers get n.
std::vector<double> positional_distances(std::size_t context_length, const corpus::AspectAnnotation& aspect);
std::vector<double> syntactic_distances(std::size_t context_length, const corpus::AspectAnnotation& aspect,
                                        const distance::DependencyTree& tree,
                                        const distance::TokenAlignment& alignment);
std::vector<double> position_weights(std::span<const double> distances, double alpha, std::size_t n);

// Rows of H^c scaled by their position weights, passed through the pre-head
// block and head-pooled to a d-vector. DimensionError on a length mismatch.
ad::Tensor aspect_feature_local(const encoder::SelfAttentionBlock& block, const ad::Tensor& context_states,
                                std::span<const double> weights);
// encode(SPC ids) -> pre-head block -> row 0.
ad::Tensor aspect_feature_spc(const encoder::Encoder& encoder, const encoder::SelfAttentionBlock& block,
                              std::span<const std::int32_t> spc_ids);

struct AggregationWindow {
  std::vector<ad::Tensor> left;   // k slots, farthest first
  ad::Tensor target;
  std::vector<ad::Tensor> right;  // k slots, nearest first
  std::vector<bool> left_padded;
  std::vector<bool> right_padded;

  std::size_t slot_count() const { return left.size() + 1 + right.size(); }
};

// Fills k slots per side from the adjacent aspects' features; a missing
// neighbour is replaced by a copy of the target feature.
AggregationWindow build_window(const corpus::Example& example, std::size_t target,
                               std::span<const ad::Tensor> features, std::size_t k);
// The window used when neighbours are ignored: every slot is the target.
AggregationWindow target_only_window(const ad::Tensor& target, std::size_t k);

// How the neighbour slots are weighted. With `learned` the scalars are the
// trainable tensors; otherwise the constants are used and no gradient flows.
struct DwaWeights {
  const ad::Tensor* eta_l = nullptr;
  const ad::Tensor* eta_r = nullptr;
  double static_l = 1.0;
  double static_r = 1.0;
};

// concat(η_l·left ; target ; η_r·right) restricted to `sides`. Padding slots
// and the target are never scaled.
ad::Tensor apply_dwa(const AggregationWindow& window, const DwaWeights& weights,
                     WindowSides sides = WindowSides::kBoth);
// H^o = H_dwa·W^o + b^o.
ad::Tensor project_window(const ad::Tensor& aggregated, const ad::Tensor& wo, const ad::Tensor& bo);
// softmax([H^o ; global]·W^d + b^d); `global` may be undefined (SPC head).
ad::Tensor classify(const ad::Tensor& projected, const ad::Tensor& global, const ad::Tensor& wd,
                    const ad::Tensor& bd);
ad::Tensor logits(const ad::Tensor& projected, const ad::Tensor& global, const ad::Tensor& wd,
                  const ad::Tensor& bd);

}  // namespace lsa::window
