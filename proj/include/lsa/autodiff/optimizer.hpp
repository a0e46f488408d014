#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsa/autodiff/tensor.hpp"

namespace lsa::ad {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ParamGroup {
  std::string name;
  std::vector<Tensor> params;
  double lr = 1e-3;
  double weight_decay = 0.0;
};

// Adam with decoupled weight decay. Each step, per parameter:
//   θ <- θ·(1 - lr·wd);  m, v updated;  θ <- θ - lr·m̂/(√v̂ + ε)
class AdamW {
 public:
  explicit AdamW(std::vector<ParamGroup> groups, AdamConfig config = {});

  // Throws TapeError when a parameter has no gradient buffer.
  void step();
  void zero_grad();

  std::uint64_t step_count() const { return steps_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  const std::vector<double>& first_moment(std::size_t group, std::size_t param) const;
  const std::vector<double>& second_moment(std::size_t group, std::size_t param) const;

 private:
  std::vector<ParamGroup> groups_;
  AdamConfig config_;
  std::vector<std::vector<std::vector<double>>> m_;
  std::vector<std::vector<std::vector<double>>> v_;
  std::uint64_t steps_ = 0;
};

}  // namespace lsa::ad
