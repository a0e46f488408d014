#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lsa/autodiff/ops.hpp"
#include "lsa/autodiff/parameters.hpp"
#include "lsa/util/rng.hpp"

namespace lsa::encoder {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 0;  // 0 means 2 * d_model
  std::size_t max_len = 80;

  std::size_t feed_forward_dim() const { return ff_dim ? ff_dim : 2 * d_model; }
  // Rejects zero sizes and a width not divisible by the head count (UsageError).
  void validate() const;
};

// Post-norm transformer block:
//   h   = LayerNorm(x + MultiHeadAttention(x))
//   out = LayerNorm(h + W2·gelu(W1·h + b1) + b2)
class SelfAttentionBlock {
 public:
  // Registers freshly initialized weights under `prefix` (scaled-normal
  // projections, zero biases, unit norm gains).
  static void initialize(ad::ParameterSet& params, const std::string& prefix, std::size_t d,
                         std::size_t ff, Rng& rng);
  static SelfAttentionBlock bind(const ad::ParameterSet& params, const std::string& prefix,
                                 std::size_t heads);

  ad::Tensor forward(const ad::Tensor& x, std::size_t valid = ad::kAllKeys) const;
  // Row 0 of forward(x), computing only what that row depends on.
  ad::Tensor forward_head(const ad::Tensor& x, std::size_t valid = ad::kAllKeys) const;
  // Attention probabilities [head][query][key] of the block's attention layer.
  std::vector<double> attention_weights(const ad::Tensor& x, std::size_t valid = ad::kAllKeys) const;

  std::size_t heads() const { return heads_; }

 private:
  ad::Tensor finish(const ad::Tensor& queries_in, const ad::Tensor& attended) const;

  ad::Tensor wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
  ad::Tensor ln1_gain_, ln1_bias_, w1_, b1_, w2_, b2_, ln2_gain_, ln2_bias_;
  std::size_t heads_ = 1;
};

// Token + learned positional embeddings followed by `layers` blocks.
class Encoder {
 public:
  static void initialize(ad::ParameterSet& params, const EncoderConfig& config, Rng& rng);
  static Encoder bind(const ad::ParameterSet& params, const EncoderConfig& config);

  // Hidden states [n×d] for `ids`. Positions >= valid_length are padding: they
  // are never attended to, so the first valid_length rows do not depend on them.
  ad::Tensor encode(std::span<const std::int32_t> ids, std::size_t valid_length = ad::kAllKeys) const;
  // Input to the first block (embeddings + positions), exposed for tests.
  ad::Tensor embed(std::span<const std::int32_t> ids) const;

  const EncoderConfig& config() const { return config_; }
  const std::vector<SelfAttentionBlock>& blocks() const { return blocks_; }

 private:
  EncoderConfig config_;
  ad::Tensor token_embedding_, position_embedding_;
  std::vector<SelfAttentionBlock> blocks_;
};

// Scaled-normal matrix: N(0, 1/fan_in).
ad::Tensor scaled_normal(std::size_t fan_in, std::size_t fan_out, Rng& rng);
ad::Tensor uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng);

}  // namespace lsa::encoder
