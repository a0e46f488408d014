#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lsa/autodiff/tensor.hpp"

// Differentiable primitives. Every op validates shapes eagerly (DimensionError),
// never mutates its inputs and, when recorded, carries an analytic backward rule.
namespace lsa::ad {

inline constexpr double kLogClamp = 1e-12;
inline constexpr double kLayerNormEps = 1e-5;
inline constexpr std::size_t kAllKeys = std::numeric_limits<std::size_t>::max();

// [m×k]·[k×n] -> [m×n]. A rank-1 left operand is treated as a single row and the
// result is rank 1.
Tensor matmul(const Tensor& a, const Tensor& b);
// x·W + b with x [n×in] or [in], W [in×out], b [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// s·t for a learnable scalar s of shape [1].
Tensor scale(const Tensor& t, const Tensor& s);
Tensor scale(const Tensor& t, double factor);
// Row i of x multiplied by the constant weights[i].
Tensor scale_rows(const Tensor& x, std::span<const double> weights);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis = 0);
Tensor row(const Tensor& x, std::size_t index);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& t, Shape shape);
Tensor transpose(const Tensor& x);
Tensor sum(const Tensor& t);
// Sum of squared entries, shape [1].
Tensor squared_norm(const Tensor& t);

Tensor gelu(const Tensor& t);
Tensor tanh(const Tensor& t);

// Softmax over a vector, or over each row of a matrix. Max-subtracted.
Tensor softmax(const Tensor& v);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = kLayerNormEps);

// -log(max(probs[gold], 1e-12)), shape [1].
Tensor cross_entropy(const Tensor& probs, std::size_t gold);

// Gathers rows of `table` [V×d] -> [n×d]; backward scatter-adds.
Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids);

// Multi-head scaled dot-product attention. q [nq×d], k and v [nk×d]; keys at
// index >= valid_keys are masked out (padding). Returns [nq×d].
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::size_t valid_keys = kAllKeys);
// The attention probabilities of the call above, laid out [head][query][key].
std::vector<double> attention_weights(const Tensor& q, const Tensor& k, std::size_t heads,
                                      std::size_t valid_keys = kAllKeys);

}  // namespace lsa::ad
