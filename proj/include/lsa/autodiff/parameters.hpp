#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lsa/autodiff/tensor.hpp"

namespace lsa::ad {

// Ordered, named collection of trainable tensors. Order is registration order and
// defines checkpoint layout.
class ParameterSet {
 public:
  // Registers (and returns) a requires_grad tensor. Names must be unique.
  Tensor add(std::string name, Tensor tensor);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;

  void zero_grad();
  // Copies values from `other` (same names, same shapes) without sharing storage.
  void assign_values(const ParameterSet& other);
  // Deep copy with fresh storage.
  ParameterSet clone() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace lsa::ad
