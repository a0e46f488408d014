#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lsa::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Backward rule of a recorded operation: reads `self.grad` and accumulates into
// the gradients of `self.inputs`.
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  BackwardFn backward;
  std::uint64_t tape_id = 0;  // 0 for leaves

  // Returns the gradient buffer, allocating zeros on first use.
  std::span<double> grad_buffer();
};

// Dense row-major float64 array. Copies share storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;  // shape[0] for rank 2, 1 for rank 1
  std::size_t cols() const;  // last dimension

  std::span<const double> values() const;
  // Direct write access. Only meant for parameters outside of a recorded step
  // (initialization, optimizer updates, finite-difference perturbation).
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  // Allocates (or resets) the gradient buffer to zeros.
  void zero_grad();

  Tensor clone() const;   // deep copy, keeps requires_grad, drops grad and history
  Tensor detach() const;  // deep copy without grad tracking

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

enum class BackwardOrder {
  kRecorded,    // reverse recording order
  kDepthFirst,  // reverse DFS post-order from the root
};

// Records operations for one forward pass and runs reverse-mode accumulation once.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(const NodePtr& node);
  // Seeds d(root)/d(root) = 1 and propagates to every reachable requires_grad
  // tensor. Gradients accumulate into leaves; the tape is consumed afterwards.
  void backward(const Tensor& root, BackwardOrder order = BackwardOrder::kRecorded);
  void clear();

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  std::uint64_t id() const { return id_; }

 private:
  std::vector<NodePtr> nodes_;
  bool consumed_ = false;
  std::uint64_t id_;
};

// Makes `tape` the recording target for the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Builds an op result. Records it on the active tape when any input requires grad;
// otherwise the result is a constant and `backward` is dropped.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   BackwardFn backward);

}  // namespace lsa::ad
