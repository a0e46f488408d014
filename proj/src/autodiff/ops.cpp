#include "lsa/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lsa/errors.hpp"

namespace lsa::ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

// Accumulation target of input `i`, or an empty span when it needs no gradient.
std::span<double> grad_of(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  if (!in.requires_grad) return {};
  return in.grad_buffer();
}

// Wider vectors where the CPU has them. Only element-wise loops are
// vectorized, so every clone gives bitwise-identical results.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define LSA_VECTOR_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define LSA_VECTOR_CLONES
#endif

// C[m×n] += A[m×k]·B[k×n]
LSA_VECTOR_CLONES void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// dA[m×k] += dC[m×n]·Bᵀ
void gemm_nt(const double* dc, const double* b, double* da, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* drow = dc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += drow[j] * brow[j];
      da[i * k + p] += acc;
    }
  }
}

// dB[k×n] += Aᵀ·dC
LSA_VECTOR_CLONES void gemm_tn(const double* __restrict a, const double* __restrict dc, double* __restrict db,
                               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* drow = dc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* brow = db + p * n;
      for (std::size_t j = 0; j < n; ++j) brow[j] += av * drow[j];
    }
  }
}

constexpr double kGeluC = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  Shape shape = a.rank() == 1 ? Shape{n} : Shape{m, n};
  return make_result(std::move(shape), std::move(out), {a, b}, [m, k, n](Node& self) {
    const double* dc = self.grad.data();
    const Node& an = *self.inputs[0];
    const Node& bn = *self.inputs[1];
    if (auto da = grad_of(self, 0); !da.empty()) gemm_nt(dc, bn.value.data(), da.data(), m, k, n);
    if (auto db = grad_of(self, 1); !db.empty()) gemm_tn(an.value.data(), dc, db.data(), m, k, n);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || x.cols() != weight.rows() || bias.rank() != 1 ||
      bias.size() != weight.cols()) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + ", weight " +
                         shape_string(weight.shape()) + ", bias " + shape_string(bias.shape()));
  }
  const std::size_t m = x.rows(), k = x.cols(), n = weight.cols();
  std::vector<double> out(m * n);
  const auto bv = bias.values();
  for (std::size_t i = 0; i < m; ++i) std::copy(bv.begin(), bv.end(), out.begin() + i * n);
  gemm_nn(x.values().data(), weight.values().data(), out.data(), m, k, n);
  Shape shape = x.rank() == 1 ? Shape{n} : Shape{m, n};
  return make_result(std::move(shape), std::move(out), {x, weight, bias}, [m, k, n](Node& self) {
    const double* dc = self.grad.data();
    if (auto dx = grad_of(self, 0); !dx.empty()) {
      gemm_nt(dc, self.inputs[1]->value.data(), dx.data(), m, k, n);
    }
    if (auto dw = grad_of(self, 1); !dw.empty()) {
      gemm_tn(self.inputs[0]->value.data(), dc, dw.data(), m, k, n);
    }
    if (auto db = grad_of(self, 2); !db.empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) db[j] += dc[i * n + j];
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t in = 0; in < 2; ++in) {
      if (auto g = grad_of(self, in); !g.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (auto g = grad_of(self, 1); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (auto g = grad_of(self, 1); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& t, const Tensor& s) {
  if (s.shape() != Shape{1}) {
    throw DimensionError("scale: factor must have shape [1], got " + shape_string(s.shape()));
  }
  const double f = s.item();
  std::vector<double> out(t.values().begin(), t.values().end());
  for (auto& v : out) v *= f;
  return make_result(t.shape(), std::move(out), {t, s}, [](Node& self) {
    const auto& tv = self.inputs[0]->value;
    const double f = self.inputs[1]->value[0];
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += f * self.grad[i];
    }
    if (auto g = grad_of(self, 1); !g.empty()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < tv.size(); ++i) acc += self.grad[i] * tv[i];
      g[0] += acc;
    }
  });
}

Tensor scale(const Tensor& t, double factor) {
  std::vector<double> out(t.values().begin(), t.values().end());
  for (auto& v : out) v *= factor;
  return make_result(t.shape(), std::move(out), {t}, [factor](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
    }
  });
}

Tensor scale_rows(const Tensor& x, std::span<const double> weights) {
  if (weights.size() != x.rows()) {
    throw DimensionError("scale_rows: " + std::to_string(weights.size()) + " weights for " +
                         shape_string(x.shape()));
  }
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<double> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] *= w[i];
  }
  return make_result(x.shape(), std::move(out), {x}, [w = std::move(w), d](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += w[i] * self.grad[i * d + j];
      }
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: empty list of parts");
  const std::size_t rank = parts.front().rank();
  if (axis >= rank) throw DimensionError("concat: axis out of range");
  for (const auto& p : parts) {
    bool ok = p.rank() == rank;
    for (std::size_t ax = 0; ok && ax < rank; ++ax) {
      if (ax != axis && p.shape()[ax] != parts.front().shape()[ax]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: incompatible part " + shape_string(p.shape()) + " vs " +
                           shape_string(parts.front().shape()) + " on axis " +
                           std::to_string(axis));
    }
  }
  Shape shape = parts.front().shape();
  shape[axis] = 0;
  for (const auto& p : parts) shape[axis] += p.shape()[axis];

  // Row-major layout: an "outer" count of blocks, each part contributing a
  // contiguous chunk of `inner` values per block.
  const std::size_t outer = (rank == 2 && axis == 1) ? shape[0] : 1;
  std::vector<std::size_t> chunk;
  chunk.reserve(parts.size());
  for (const auto& p : parts) chunk.push_back(p.size() / outer);
  std::vector<double> out;
  out.reserve(shape_size(shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto v = parts[i].values();
      out.insert(out.end(), v.begin() + o * chunk[i], v.begin() + (o + 1) * chunk[i]);
    }
  }
  return make_result(std::move(shape), std::move(out), parts,
                     [outer, chunk = std::move(chunk)](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t i = 0; i < chunk.size(); ++i) {
                           if (auto g = grad_of(self, i); !g.empty()) {
                             for (std::size_t j = 0; j < chunk[i]; ++j) {
                               g[o * chunk[i] + j] += self.grad[offset + j];
                             }
                           }
                           offset += chunk[i];
                         }
                       }
                     });
}

Tensor row(const Tensor& x, std::size_t index) {
  if (x.rank() != 2 || index >= x.rows()) {
    throw DimensionError("row: index " + std::to_string(index) + " out of range for " +
                         shape_string(x.shape()));
  }
  const std::size_t d = x.cols();
  const auto v = x.values();
  std::vector<double> out(v.begin() + index * d, v.begin() + (index + 1) * d);
  return make_result({d}, std::move(out), {x}, [index, d](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t j = 0; j < d; ++j) g[index * d + j] += self.grad[j];
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() != 2 || begin >= end || end > x.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for " + shape_string(x.shape()));
  }
  const std::size_t d = x.cols();
  const auto v = x.values();
  std::vector<double> out(v.begin() + begin * d, v.begin() + end * d);
  return make_result({end - begin, d}, std::move(out), {x}, [begin, d](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t j = 0; j < self.grad.size(); ++j) g[begin * d + j] += self.grad[j];
    }
  });
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_size(shape) != t.size()) {
    throw DimensionError("reshape: " + shape_string(t.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> out(t.values().begin(), t.values().end());
  return make_result(std::move(shape), std::move(out), {t}, [](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("transpose: rank-2 tensor required");
  const std::size_t m = x.rows(), n = x.cols();
  const auto v = x.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = v[i * n + j];
  }
  return make_result({n, m}, std::move(out), {x}, [m, n](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
      }
    }
  });
}

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  return make_result({1}, {acc}, {t}, [](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (auto& x : g) x += self.grad[0];
    }
  });
}

Tensor squared_norm(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v * v;
  return make_result({1}, {acc}, {t}, [](Node& self) {
    const auto& tv = self.inputs[0]->value;
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * tv[i] * self.grad[0];
    }
  });
}

Tensor gelu(const Tensor& t) {
  std::vector<double> out(t.size());
  const auto v = t.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = v[i];
    out[i] = 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + kGeluC * x * x * x)));
  }
  return make_result(t.shape(), std::move(out), {t}, [](Node& self) {
    const auto& xv = self.inputs[0]->value;
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = xv[i];
        const double th = std::tanh(kSqrt2OverPi * (x + kGeluC * x * x * x));
        const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluC * x * x);
        g[i] += self.grad[i] * (0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner);
      }
    }
  });
}

Tensor tanh(const Tensor& t) {
  std::vector<double> out(t.size());
  const auto v = t.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(v[i]);
  return make_result(t.shape(), std::move(out), {t}, [](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
      }
    }
  });
}

Tensor softmax(const Tensor& v) {
  const std::size_t n = v.rows(), c = v.cols();
  const auto x = v.values();
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.data() + r * c;
    double* yr = out.data() + r * c;
    const double mx = *std::max_element(xr, xr + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += (yr[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < c; ++j) yr[j] /= total;
  }
  return make_result(v.shape(), std::move(out), {v}, [n, c](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t r = 0; r < n; ++r) {
        const double* y = self.value.data() + r * c;
        const double* dy = self.grad.data() + r * c;
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += dy[j] * y[j];
        for (std::size_t j = 0; j < c; ++j) g[r * c + j] += y[j] * (dy[j] - dot);
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t n = x.rows(), d = x.cols();
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(d) + "], got " +
                         shape_string(gain.shape()) + " and " + shape_string(bias.shape()));
  }
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  std::vector<double> normalized(xv.size());
  std::vector<double> inv_std(n);
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = xv.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xr[j] - mean) * inv_std[r];
      normalized[r * d + j] = xh;
      out[r * d + j] = gv[j] * xh + bv[j];
    }
  }
  return make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [n, d, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& self) {
        const auto& gv = self.inputs[1]->value;
        auto dx = grad_of(self, 0);
        auto dg = grad_of(self, 1);
        auto db = grad_of(self, 2);
        std::vector<double> dxh(d);
        for (std::size_t r = 0; r < n; ++r) {
          const double* dy = self.grad.data() + r * d;
          const double* xh = normalized.data() + r * d;
          if (!dg.empty()) {
            for (std::size_t j = 0; j < d; ++j) dg[j] += dy[j] * xh[j];
          }
          if (!db.empty()) {
            for (std::size_t j = 0; j < d; ++j) db[j] += dy[j];
          }
          if (!dx.empty()) {
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              dxh[j] = dy[j] * gv[j];
              mean_dxh += dxh[j];
              mean_dxh_xh += dxh[j] * xh[j];
            }
            mean_dxh /= static_cast<double>(d);
            mean_dxh_xh /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
              dx[r * d + j] += inv_std[r] * (dxh[j] - mean_dxh - xh[j] * mean_dxh_xh);
            }
          }
        }
      });
}

Tensor cross_entropy(const Tensor& probs, std::size_t gold) {
  if (probs.rank() != 1) {
    throw DimensionError("cross_entropy: expects a probability vector, got " +
                         shape_string(probs.shape()));
  }
  if (gold >= probs.size()) {
    throw DimensionError("cross_entropy: gold class " + std::to_string(gold) +
                         " out of range for " + std::to_string(probs.size()) + " classes");
  }
  const double p = probs.at(gold);
  const bool clamped = !(p > kLogClamp);
  const double loss = -std::log(clamped ? kLogClamp : p);
  return make_result({1}, {loss}, {probs}, [gold, clamped](Node& self) {
    if (clamped) return;
    if (auto g = grad_of(self, 0); !g.empty()) {
      g[gold] -= self.grad[0] / self.inputs[0]->value[gold];
    }
  });
}

Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids) {
  if (table.rank() != 2) throw DimensionError("embedding: table must be rank 2");
  if (ids.empty()) throw DimensionError("embedding: empty id sequence");
  const std::size_t vocab = table.rows(), d = table.cols();
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  const auto tv = table.values();
  std::vector<double> out(idx.size() * d);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab) {
      throw DimensionError("embedding: id " + std::to_string(idx[i]) + " outside table of " +
                           std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.begin() + idx[i] * d, d, out.begin() + i * d);
  }
  const std::size_t n = idx.size();
  return make_result({n, d}, std::move(out), {table}, [idx = std::move(idx), d](Node& self) {
    if (auto g = grad_of(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) g[idx[i] * d + j] += self.grad[i * d + j];
      }
    }
  });
}

namespace {

struct AttentionShape {
  std::size_t nq, nk, d, heads, dh, valid;
};

AttentionShape check_attention(const Tensor& q, const Tensor& k, std::size_t heads,
                               std::size_t valid_keys) {
  if (q.rank() != 2 || k.rank() != 2 || q.cols() != k.cols()) {
    throw DimensionError("attention: query " + shape_string(q.shape()) + " and key " +
                         shape_string(k.shape()) + " disagree");
  }
  if (heads == 0 || q.cols() % heads != 0) {
    throw DimensionError("attention: model width " + std::to_string(q.cols()) +
                         " is not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t valid = std::min(valid_keys, k.rows());
  if (valid == 0) throw DimensionError("attention: every key is masked");
  return {q.rows(), k.rows(), q.cols(), heads, q.cols() / heads, valid};
}

// probs[h][i][j] for j < valid; masked keys keep probability 0.
std::vector<double> attention_probs(const AttentionShape& s, const double* q, const double* k) {
  std::vector<double> probs(s.heads * s.nq * s.nk, 0.0);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(s.dh));
  for (std::size_t h = 0; h < s.heads; ++h) {
    const std::size_t off = h * s.dh;
    for (std::size_t i = 0; i < s.nq; ++i) {
      double* p = probs.data() + (h * s.nq + i) * s.nk;
      const double* qi = q + i * s.d + off;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s.valid; ++j) {
        const double* kj = k + j * s.d + off;
        double dot = 0.0;
        for (std::size_t c = 0; c < s.dh; ++c) dot += qi[c] * kj[c];
        p[j] = dot * inv_sqrt;
        mx = std::max(mx, p[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < s.valid; ++j) total += (p[j] = std::exp(p[j] - mx));
      for (std::size_t j = 0; j < s.valid; ++j) p[j] /= total;
    }
  }
  return probs;
}

}  // namespace

std::vector<double> attention_weights(const Tensor& q, const Tensor& k, std::size_t heads,
                                      std::size_t valid_keys) {
  const auto s = check_attention(q, k, heads, valid_keys);
  return attention_probs(s, q.values().data(), k.values().data());
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::size_t valid_keys) {
  const auto s = check_attention(q, k, heads, valid_keys);
  if (v.shape() != k.shape()) {
    throw DimensionError("attention: value " + shape_string(v.shape()) + " does not match key " +
                         shape_string(k.shape()));
  }
  auto probs = attention_probs(s, q.values().data(), k.values().data());
  const double* vv = v.values().data();
  std::vector<double> out(s.nq * s.d, 0.0);
  for (std::size_t h = 0; h < s.heads; ++h) {
    const std::size_t off = h * s.dh;
    for (std::size_t i = 0; i < s.nq; ++i) {
      const double* p = probs.data() + (h * s.nq + i) * s.nk;
      double* oi = out.data() + i * s.d + off;
      for (std::size_t j = 0; j < s.valid; ++j) {
        const double* vj = vv + j * s.d + off;
        for (std::size_t c = 0; c < s.dh; ++c) oi[c] += p[j] * vj[c];
      }
    }
  }
  return make_result({s.nq, s.d}, std::move(out), {q, k, v}, [s, probs = std::move(probs)](Node& self) {
    const double* qv = self.inputs[0]->value.data();
    const double* kv = self.inputs[1]->value.data();
    const double* vv = self.inputs[2]->value.data();
    auto dq = grad_of(self, 0);
    auto dk = grad_of(self, 1);
    auto dv = grad_of(self, 2);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(s.dh));
    std::vector<double> dp(s.valid);
    for (std::size_t h = 0; h < s.heads; ++h) {
      const std::size_t off = h * s.dh;
      for (std::size_t i = 0; i < s.nq; ++i) {
        const double* p = probs.data() + (h * s.nq + i) * s.nk;
        const double* doi = self.grad.data() + i * s.d + off;
        double weighted = 0.0;
        for (std::size_t j = 0; j < s.valid; ++j) {
          const double* vj = vv + j * s.d + off;
          double acc = 0.0;
          for (std::size_t c = 0; c < s.dh; ++c) acc += doi[c] * vj[c];
          dp[j] = acc;
          weighted += acc * p[j];
          if (!dv.empty()) {
            double* dvj = dv.data() + j * s.d + off;
            for (std::size_t c = 0; c < s.dh; ++c) dvj[c] += p[j] * doi[c];
          }
        }
        if (dq.empty() && dk.empty()) continue;
        const double* qi = qv + i * s.d + off;
        for (std::size_t j = 0; j < s.valid; ++j) {
          const double ds = p[j] * (dp[j] - weighted) * inv_sqrt;
          if (ds == 0.0) continue;
          const double* kj = kv + j * s.d + off;
          if (!dq.empty()) {
            double* dqi = dq.data() + i * s.d + off;
            for (std::size_t c = 0; c < s.dh; ++c) dqi[c] += ds * kj[c];
          }
          if (!dk.empty()) {
            double* dkj = dk.data() + j * s.d + off;
            for (std::size_t c = 0; c < s.dh; ++c) dkj[c] += ds * qi[c];
          }
        }
      }
    }
  });
}

}  // namespace lsa::ad
