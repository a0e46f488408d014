#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lsa/autodiff/parameters.hpp"
#include "lsa/corpus/types.hpp"
#include "lsa/distance/distance.hpp"
#include "lsa/encoder/transformer.hpp"
#include "lsa/encoder/vocabulary.hpp"
#include "lsa/window/window.hpp"

namespace lsa::window {

struct ModelConfig {
  encoder::EncoderConfig encoder;
  Variant variant = Variant::kToken;
  std::size_t k = 1;
  double alpha = kDefaultAlpha;
  WindowSides sides = WindowSides::kBoth;
  bool dwa = true;             // learnable η; otherwise the static values below
  bool backbone_only = false;  // every slot holds the target feature
  double static_eta_l = 1.0;
  double static_eta_r = 1.0;

  std::size_t window_slots() const { return sides == WindowSides::kBoth ? 2 * k + 1 : k + 1; }
  void validate() const;
};

struct PreparedAspect {
  std::vector<double> weights;        // per position of [CLS] ctx [SEP] (LSA_T / LSA_S)
  std::vector<std::int32_t> spc_ids;  // LSA_P input
  std::size_t gold = 0;
  bool implicit = false;
  std::size_t cluster_size = 1;
};

// An example converted to ids and position weights once, up front.
struct PreparedExample {
  corpus::Example example;
  std::vector<std::int32_t> context_ids;  // [CLS] ctx [SEP], context cut to max_len - 2
  std::vector<PreparedAspect> aspects;
  bool syntax_fallback = false;  // LSA_S without a usable parse: positional distances used
};

struct PreparedDataset {
  std::vector<PreparedExample> examples;
  std::size_t syntax_fallbacks = 0;
  std::size_t pair_count() const;
};

// `parses` is consulted for LSA_S only. An example without a parse_ref, without
// a matching tree, or whose tree does not cover its tokens falls back to
// positional distances and is counted.
PreparedDataset prepare_dataset(const corpus::Dataset& dataset, const encoder::Vocabulary& vocab,
                                const ModelConfig& config, const distance::ParseMap* parses = nullptr);

class LsaModel {
 public:
  // Fresh parameters, fully determined by the seed. η starts at exactly 1.
  static ad::ParameterSet initialize(const ModelConfig& config, std::uint64_t seed);

  LsaModel(ModelConfig config, const ad::ParameterSet& params);

  // Logits [C] per aspect of the example.
  std::vector<ad::Tensor> forward(const PreparedExample& example) const;
  // Aspect features H* of every aspect, in aspect order.
  std::vector<ad::Tensor> aspect_features(const PreparedExample& example) const;
  // Global feature of the context (undefined for LSA_P).
  ad::Tensor global_feature(const PreparedExample& example) const;
  // Logits of a single-aspect example computed from concat(H^t, ..., H^t)
  // without the window machinery.
  ad::Tensor reference_mono_aspect(const PreparedExample& example) const;

  const ModelConfig& config() const { return config_; }
  const encoder::Encoder& encoder() const { return encoder_; }
  const ad::Tensor& eta_l() const { return eta_l_; }
  const ad::Tensor& eta_r() const { return eta_r_; }

 private:
  ad::Tensor head(const ad::Tensor& aggregated, const ad::Tensor& global) const;

  ModelConfig config_;
  encoder::Encoder encoder_;
  encoder::SelfAttentionBlock local_;
  encoder::SelfAttentionBlock global_;
  ad::Tensor wo_, bo_, wd_, bd_, eta_l_, eta_r_;
};

// Parameter names of the learnable η scalars.
inline constexpr const char* kEtaLeft = "dwa.eta_l";
inline constexpr const char* kEtaRight = "dwa.eta_r";

}  // namespace lsa::window
