// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "htgnn/error.hpp"

namespace htgnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One vertex of the dynamic computation graph. Leaves have no inputs and no
// backward function.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major float64 tensor with reverse-mode differentiation.
///
/// Tensor is a cheap handle; copies share storage and graph history. Values
/// are treated as immutable once produced by an operation. Only leaves (for
/// example parameters during an optimizer step) are written in place.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> values() const;
  /// In-place access for leaves (initialization, optimizer updates).
  std::span<double> mutable_values();
  double item() const;
  double operator()(std::size_t i) const;
  double operator()(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  bool has_grad() const;
  /// Gradient after backward(); zeros when nothing reached this tensor.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Populates gradients of every reachable leaf. Requires a one-element tensor.
  void backward() const;

  /// Same values, no history.
  Tensor detach() const;

  const char* op_name() const;

  // Used by operation implementations.
  static Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                            std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

/// Topologically ordered record of the operations reachable from a root.
/// Entry k only consumes leaves or outputs of entries before k.
class ComputationTape {
 public:
  struct Entry {
    const detail::Node* node;
    std::string op;
    std::vector<std::ptrdiff_t> input_positions;  // -1 for leaves
  };

  static ComputationTape record(const Tensor& root);

  const std::vector<Entry>& entries() const { return entries_; }
  bool is_topological() const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace htgnn
