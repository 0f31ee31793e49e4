#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ssmamba/num/tensor.hpp"

namespace ssmamba::num {

// One vertex of the computation graph. Values are immutable once created;
// `grad` is scratch space owned by reverse_accumulate (intermediates) or
// persistent storage (parameter leaves).
template <class T>
struct Node {
  using NodePtr = std::shared_ptr<Node>;
  using Backward = std::function<void(Node&)>;

  Tensor<T> value;
  Tensor<T> grad;
  std::vector<NodePtr> parents;
  Backward backward;
  bool requires_grad = false;
  const char* op = "leaf";

  bool is_leaf() const { return parents.empty(); }

  // Adds `g` into this node's gradient, allocating it on first use.
  void accumulate(const Tensor<T>& g);
  Tensor<T>& grad_buffer();
};

// Handle on a graph node. Cheap to copy.
template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return static_cast<bool>(node_); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {
inline thread_local bool grad_enabled = true;
}

// While a NoGradGuard is alive on this thread, new ops record no graph.
inline bool grad_enabled() { return detail::grad_enabled; }

class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return Var<T>(std::move(n));
}

// Builds an op node. If no parent needs a gradient the backward closure and
// parent links are dropped so the subgraph can be freed early.
template <class T>
Var<T> make_op(const char* op, Tensor<T> value, std::vector<Var<T>> parents,
               typename Node<T>::Backward backward) {
  auto n = std::make_shared<Node<T>>();
  n->op = op;
  n->value = std::move(value);
  if (checked_mode()) n->value.require_finite(op);
  if (grad_enabled()) {
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
  }
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Var<T>(std::move(n));
}

// Named trainable tensor. The gradient persists across reverse passes and
// accumulates until zero_grad().
template <class T>
class ParamLeaf {
 public:
  ParamLeaf(std::string name, Tensor<T> value, bool trainable = true);
  ParamLeaf(const ParamLeaf&) = delete;
  ParamLeaf& operator=(const ParamLeaf&) = delete;
  ParamLeaf(ParamLeaf&&) noexcept = default;
  ParamLeaf& operator=(ParamLeaf&&) noexcept = default;

  const std::string& name() const { return name_; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Tensor<T>& grad() const;
  Tensor<T>& mutable_grad();
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }

  bool trainable() const { return node_->requires_grad; }
  void set_trainable(bool on) { node_->requires_grad = on; }
  void zero_grad();

  Var<T> var() const { return Var<T>(node_); }

 private:
  std::string name_;
  std::shared_ptr<Node<T>> node_;
};

// Back-propagates d(root)/d(leaf) into every reachable leaf that requires a
// gradient. Leaf gradients accumulate; intermediate gradients are released
// once consumed. Throws ContractViolation for a non-scalar root or a cycle.
template <class T>
void reverse_accumulate(const Var<T>& root);

extern template struct Node<float>;
extern template struct Node<double>;
extern template class ParamLeaf<float>;
extern template class ParamLeaf<double>;
extern template void reverse_accumulate<float>(const Var<float>&);
extern template void reverse_accumulate<double>(const Var<double>&);

}  // namespace ssmamba::num
