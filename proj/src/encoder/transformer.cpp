#include "lsa/encoder/transformer.hpp"

#include <cmath>
#include <numeric>

#include "lsa/errors.hpp"

namespace lsa::encoder {

using ad::Tensor;

void EncoderConfig::validate() const {
  if (vocab_size <= 4) throw UsageError("encoder: vocabulary has no content tokens");
  if (d_model == 0 || layers == 0 || heads == 0 || max_len == 0) {
    throw UsageError("encoder: d_model, layers, heads and max_len must be positive");
  }
  if (d_model % heads != 0) {
    throw UsageError("encoder: d_model " + std::to_string(d_model) + " is not divisible by " +
                     std::to_string(heads) + " heads");
  }
}

Tensor scaled_normal(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(fan_in * fan_out);
  for (auto& x : v) x = sd * rng.normal();
  return Tensor::from({fan_in, fan_out}, std::move(v));
}

Tensor uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from({rows, cols}, std::move(v));
}

void SelfAttentionBlock::initialize(ad::ParameterSet& params, const std::string& prefix,
                                    std::size_t d, std::size_t ff, Rng& rng) {
  for (const char* name : {"q", "k", "v", "o"}) {
    params.add(prefix + ".w" + name, scaled_normal(d, d, rng));
    params.add(prefix + ".b" + name, Tensor::zeros({d}));
  }
  params.add(prefix + ".ln1.gain", Tensor::filled({d}, 1.0));
  params.add(prefix + ".ln1.bias", Tensor::zeros({d}));
  params.add(prefix + ".ff.w1", scaled_normal(d, ff, rng));
  params.add(prefix + ".ff.b1", Tensor::zeros({ff}));
  params.add(prefix + ".ff.w2", scaled_normal(ff, d, rng));
  params.add(prefix + ".ff.b2", Tensor::zeros({d}));
  params.add(prefix + ".ln2.gain", Tensor::filled({d}, 1.0));
  params.add(prefix + ".ln2.bias", Tensor::zeros({d}));
}

SelfAttentionBlock SelfAttentionBlock::bind(const ad::ParameterSet& params,
                                            const std::string& prefix, std::size_t heads) {
  SelfAttentionBlock b;
  auto get = [&](const std::string& name) { return params.get(prefix + "." + name); };
  b.wq_ = get("wq"), b.bq_ = get("bq");
  b.wk_ = get("wk"), b.bk_ = get("bk");
  b.wv_ = get("wv"), b.bv_ = get("bv");
  b.wo_ = get("wo"), b.bo_ = get("bo");
  b.ln1_gain_ = get("ln1.gain"), b.ln1_bias_ = get("ln1.bias");
  b.w1_ = get("ff.w1"), b.b1_ = get("ff.b1");
  b.w2_ = get("ff.w2"), b.b2_ = get("ff.b2");
  b.ln2_gain_ = get("ln2.gain"), b.ln2_bias_ = get("ln2.bias");
  b.heads_ = heads;
  if (b.wq_.cols() % heads != 0) {
    throw UsageError("self-attention block '" + prefix + "': width not divisible by heads");
  }
  return b;
}

Tensor SelfAttentionBlock::finish(const Tensor& queries_in, const Tensor& attended) const {
  const Tensor h = ad::layer_norm(ad::add(queries_in, ad::linear(attended, wo_, bo_)), ln1_gain_, ln1_bias_);
  const Tensor f = ad::linear(ad::gelu(ad::linear(h, w1_, b1_)), w2_, b2_);
  return ad::layer_norm(ad::add(h, f), ln2_gain_, ln2_bias_);
}

Tensor SelfAttentionBlock::forward(const Tensor& x, std::size_t valid) const {
  const Tensor q = ad::linear(x, wq_, bq_);
  const Tensor k = ad::linear(x, wk_, bk_);
  const Tensor v = ad::linear(x, wv_, bv_);
  return finish(x, ad::attention(q, k, v, heads_, valid));
}

Tensor SelfAttentionBlock::forward_head(const Tensor& x, std::size_t valid) const {
  const Tensor x0 = ad::slice_rows(x, 0, 1);
  const Tensor q = ad::linear(x0, wq_, bq_);
  const Tensor k = ad::linear(x, wk_, bk_);
  const Tensor v = ad::linear(x, wv_, bv_);
  return ad::row(finish(x0, ad::attention(q, k, v, heads_, valid)), 0);
}

std::vector<double> SelfAttentionBlock::attention_weights(const Tensor& x, std::size_t valid) const {
  return ad::attention_weights(ad::linear(x, wq_, bq_), ad::linear(x, wk_, bk_), heads_, valid);
}

void Encoder::initialize(ad::ParameterSet& params, const EncoderConfig& config, Rng& rng) {
  config.validate();
  params.add("encoder.token_embedding", uniform_matrix(config.vocab_size, config.d_model, 0.1, rng));
  params.add("encoder.position_embedding", uniform_matrix(config.max_len, config.d_model, 0.1, rng));
  for (std::size_t l = 0; l < config.layers; ++l) {
    SelfAttentionBlock::initialize(params, "encoder.layer" + std::to_string(l), config.d_model,
                                   config.feed_forward_dim(), rng);
  }
}

Encoder Encoder::bind(const ad::ParameterSet& params, const EncoderConfig& config) {
  config.validate();
  Encoder e;
  e.config_ = config;
  e.token_embedding_ = params.get("encoder.token_embedding");
  e.position_embedding_ = params.get("encoder.position_embedding");
  if (e.token_embedding_.shape() != ad::Shape{config.vocab_size, config.d_model} ||
      e.position_embedding_.shape() != ad::Shape{config.max_len, config.d_model}) {
    throw DimensionError("encoder parameters do not match the configuration");
  }
  for (std::size_t l = 0; l < config.layers; ++l) {
    e.blocks_.push_back(
        SelfAttentionBlock::bind(params, "encoder.layer" + std::to_string(l), config.heads));
  }
  return e;
}

Tensor Encoder::embed(std::span<const std::int32_t> ids) const {
  if (ids.size() > config_.max_len) {
    throw DimensionError("encode: sequence of " + std::to_string(ids.size()) +
                         " tokens exceeds max length " + std::to_string(config_.max_len));
  }
  std::vector<std::int32_t> positions(ids.size());
  std::iota(positions.begin(), positions.end(), 0);
  return ad::add(ad::embedding(token_embedding_, ids), ad::embedding(position_embedding_, positions));
}

Tensor Encoder::encode(std::span<const std::int32_t> ids, std::size_t valid_length) const {
  Tensor h = embed(ids);
  for (const auto& block : blocks_) h = block.forward(h, valid_length);
  return h;
}

}  // namespace lsa::encoder
