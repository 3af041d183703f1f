// SPDX-License-Identifier: Apache-2.0
#include "htgnn/tensor.hpp"

#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace htgnn {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_mode_enabled() { return g_grad_enabled; }

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " holds " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_string(node_->shape));
  }
  return node_->shape[axis];
}

std::size_t Tensor::size() const { return node_->value.size(); }

std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::mutable_values() { return node_->value; }

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

double Tensor::operator()(std::size_t i) const { return node_->value.at(i); }

double Tensor::operator()(std::size_t i, std::size_t j) const {
  if (rank() != 2) throw DimensionError("2-index access on " + shape_string(shape()));
  return node_->value.at(i * node_->shape[1] + j);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return node_->grad.size() == node_->value.size(); }

std::span<const double> Tensor::grad() const { return node_->grad_buffer(); }
std::span<double> Tensor::mutable_grad() { return node_->grad_buffer(); }

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

const char* Tensor::op_name() const { return node_->op; }

Tensor Tensor::make_result(Shape shape, std::vector<double> values, const char* op,
                           std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = op;
  bool any = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) any = any || in.requires_grad();
  }
  if (any) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

namespace {

// Reverse postorder of the differentiable subgraph below root.
std::vector<detail::Node*> topological_order(detail::Node* root) {
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // inputs before consumers
}

}  // namespace

void Tensor::backward() const {
  if (!defined()) throw Error("backward() on undefined tensor");
  if (size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + shape_string(shape()));
  }
  if (!node_->requires_grad) return;
  auto order = topological_order(node_.get());
  for (auto* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

ComputationTape ComputationTape::record(const Tensor& root) {
  ComputationTape tape;
  if (!root.defined() || !root.requires_grad()) return tape;
  auto order = topological_order(root.node().get());
  std::unordered_map<const detail::Node*, std::ptrdiff_t> position;
  for (auto* n : order) {
    if (!n->backward) continue;
    Entry e{n, n->op, {}};
    for (const auto& in : n->inputs) {
      auto found = position.find(in.get());
      e.input_positions.push_back(found == position.end() ? -1 : found->second);
    }
    position[n] = static_cast<std::ptrdiff_t>(tape.entries_.size());
    tape.entries_.push_back(std::move(e));
  }
  return tape;
}

bool ComputationTape::is_topological() const {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    for (std::size_t i = 0; i < entries_[k].input_positions.size(); ++i) {
      const auto p = entries_[k].input_positions[i];
      if (p >= static_cast<std::ptrdiff_t>(k)) return false;
      if (p < 0 && entries_[k].node->inputs[i]->backward) return false;
    }
  }
  return true;
}

}  // namespace htgnn
