#include "lsa/autodiff/optimizer.hpp"

#include <cmath>

#include "lsa/errors.hpp"

namespace lsa::ad {

AdamW::AdamW(std::vector<ParamGroup> groups, AdamConfig config)
    : groups_(std::move(groups)), config_(config) {
  for (const auto& g : groups_) {
    auto& gm = m_.emplace_back();
    auto& gv = v_.emplace_back();
    for (const auto& p : g.params) {
      gm.emplace_back(p.size(), 0.0);
      gv.emplace_back(p.size(), 0.0);
    }
  }
}

void AdamW::step() {
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    for (std::size_t pi = 0; pi < groups_[gi].params.size(); ++pi) {
      if (!groups_[gi].params[pi].has_grad()) {
        throw TapeError("optimizer step: parameter " + std::to_string(pi) + " of group '" +
                        groups_[gi].name + "' has no gradient");
      }
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    auto& group = groups_[gi];
    const double decay = 1.0 - group.lr * group.weight_decay;
    for (std::size_t pi = 0; pi < group.params.size(); ++pi) {
      auto& p = group.params[pi];
      auto values = p.mutable_values();
      const auto grad = p.grad();
      auto& m = m_[gi][pi];
      auto& v = v_[gi][pi];
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grad[i];
        values[i] *= decay;
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        values[i] -= group.lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }
}

void AdamW::zero_grad() {
  for (auto& g : groups_) {
    for (auto& p : g.params) p.zero_grad();
  }
}

const std::vector<double>& AdamW::first_moment(std::size_t group, std::size_t param) const {
  return m_.at(group).at(param);
}

const std::vector<double>& AdamW::second_moment(std::size_t group, std::size_t param) const {
  return v_.at(group).at(param);
}

}  // namespace lsa::ad
