#include "lsa/autodiff/parameters.hpp"

#include <algorithm>

#include "lsa/errors.hpp"

namespace lsa::ad {

Tensor ParameterSet::add(std::string name, Tensor tensor) {
  if (contains(name)) throw Error("duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  entries_.emplace_back(std::move(name), tensor);
  return tensor;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw Error("unknown parameter '" + name + "'");
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [_, t] : entries_) out.push_back(t);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

void ParameterSet::assign_values(const ParameterSet& other) {
  if (other.size() != size()) throw Error("parameter sets differ in size");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& [name, dst] = entries_[i];
    const auto& [oname, src] = other.entries_[i];
    if (name != oname || dst.shape() != src.shape()) {
      throw Error("parameter '" + name + "' does not match '" + oname + "'");
    }
    std::copy(src.values().begin(), src.values().end(), dst.mutable_values().begin());
  }
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [name, t] : entries_) out.add(name, t.clone());
  return out;
}

}  // namespace lsa::ad
