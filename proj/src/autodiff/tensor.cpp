#include "lsa/autodiff/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_set>

#include "lsa/errors.hpp"

namespace lsa::ad {

namespace {

thread_local Tape* g_active_tape = nullptr;
std::atomic<std::uint64_t> g_next_tape_id{1};

const Shape kEmptyShape{};

Node& checked(const NodePtr& node) {
  if (!node) throw Error("use of an undefined tensor");
  return *node;
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::span<double> Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const auto n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError("tensors must have rank 1 or 2, got " + shape_string(shape));
  }
  for (auto d : shape) {
    if (d == 0) throw DimensionError("zero-length dimension in " + shape_string(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const auto n = values.size();
  return from({n}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const { return node_ ? node_->shape : kEmptyShape; }

std::size_t Tensor::size() const { return checked(node_).value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = checked(node_).shape;
  return s.size() == 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const { return checked(node_).shape.back(); }

std::span<const double> Tensor::values() const { return checked(node_).value; }

std::span<double> Tensor::mutable_values() { return checked(node_).value; }

double Tensor::item() const {
  const auto& n = checked(node_);
  if (n.value.size() != 1) {
    throw DimensionError("item() on non-scalar tensor " + shape_string(n.shape));
  }
  return n.value[0];
}

double Tensor::at(std::size_t i) const { return checked(node_).value.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
  return checked(node_).value.at(r * cols() + c);
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) { checked(node_).requires_grad = flag; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  const auto& n = checked(node_);
  if (n.grad.empty()) throw TapeError("tensor " + shape_string(n.shape) + " has no gradient");
  return n.grad;
}

std::span<double> Tensor::mutable_grad() { return checked(node_).grad_buffer(); }

void Tensor::zero_grad() {
  auto& n = checked(node_);
  n.grad.assign(n.value.size(), 0.0);
}

Tensor Tensor::clone() const {
  const auto& n = checked(node_);
  return from(n.shape, n.value, n.requires_grad);
}

Tensor Tensor::detach() const {
  const auto& n = checked(node_);
  return from(n.shape, n.value, false);
}

Tape::Tape() : id_(g_next_tape_id.fetch_add(1)) {}

void Tape::record(const NodePtr& node) {
  if (consumed_) throw TapeError("recording onto a consumed tape; clear() it first");
  node->tape_id = id_;
  nodes_.push_back(node);
}

void Tape::clear() {
  nodes_.clear();
  consumed_ = false;
}

void Tape::backward(const Tensor& root, BackwardOrder order) {
  if (consumed_) throw TapeError("backward already ran on this tape; re-record the forward pass");
  if (!root.defined()) throw TapeError("backward on an undefined tensor");
  auto& root_node = *root.node();
  if (root_node.value.size() != 1) {
    throw TapeError("backward root must be scalar, got " + shape_string(root_node.shape));
  }
  if (!root_node.requires_grad) {
    throw TapeError("backward root does not depend on any requires_grad tensor");
  }

  std::vector<Node*> schedule;
  if (root_node.tape_id == 0) {
    // A leaf root: nothing recorded, only the seed.
  } else if (root_node.tape_id != id_) {
    throw TapeError("backward root was recorded on a different tape");
  } else if (order == BackwardOrder::kRecorded) {
    schedule.reserve(nodes_.size());
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) schedule.push_back(it->get());
  } else {
    // Iterative DFS post-order restricted to nodes of this tape, then reversed.
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{&root_node, 0}};
    visited.insert(&root_node);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        Node* child = node->inputs[next++].get();
        if (child->tape_id == id_ && visited.insert(child).second) stack.emplace_back(child, 0);
      } else {
        schedule.push_back(node);
        stack.pop_back();
      }
    }
    std::reverse(schedule.begin(), schedule.end());
  }

  root_node.grad_buffer()[0] += 1.0;
  for (Node* node : schedule) {
    if (node->grad.empty() || !node->backward) continue;
    node->backward(*node);
  }
  consumed_ = true;
  // Intermediate results are no longer needed; leaves keep their accumulated grads.
  for (auto& n : nodes_) {
    n->backward = nullptr;
    n->inputs.clear();
  }
  nodes_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   BackwardFn backward) {
#ifndef NDEBUG
  for (double v : values) {
    if (!std::isfinite(v)) {
      bool finite_inputs = true;
      for (const auto& in : inputs) {
        for (double x : in.values()) finite_inputs = finite_inputs && std::isfinite(x);
      }
      if (finite_inputs) throw NumericError("non-finite value produced from finite inputs");
      break;
    }
  }
#endif
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  Tape* tape = active_tape();
  const bool track =
      tape != nullptr && std::any_of(inputs.begin(), inputs.end(),
                                     [](const Tensor& t) { return t.requires_grad(); });
  if (track) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
    tape->record(node);
  }
  return Tensor(std::move(node));
}

}  // namespace lsa::ad
