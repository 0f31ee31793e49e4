#include "ssmamba/num/autograd.hpp"

#include <unordered_map>

#include "ssmamba/errors.hpp"

namespace ssmamba::num {

template <class T>
Tensor<T>& Node<T>::grad_buffer() {
  if (grad.shape() != value.shape() || grad.size() != value.size()) grad = Tensor<T>(value.shape());
  return grad;
}

template <class T>
void Node<T>::accumulate(const Tensor<T>& g) {
  if (g.size() != value.size()) {
    throw ContractViolation(std::string("gradient of size ") + std::to_string(g.size()) +
                            " for node '" + op + "' of shape " + shape_str(value.shape()));
  }
  auto& dst = grad_buffer();
  auto out = dst.data();
  auto in = g.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
}

template <class T>
ParamLeaf<T>::ParamLeaf(std::string name, Tensor<T> value, bool trainable)
    : name_(std::move(name)), node_(std::make_shared<Node<T>>()) {
  node_->op = "param";
  node_->value = std::move(value);
  node_->grad = Tensor<T>(node_->value.shape());
  node_->requires_grad = trainable;
}

template <class T>
const Tensor<T>& ParamLeaf<T>::grad() const {
  return node_->grad_buffer();
}

template <class T>
Tensor<T>& ParamLeaf<T>::mutable_grad() {
  return node_->grad_buffer();
}

template <class T>
void ParamLeaf<T>::zero_grad() {
  node_->grad_buffer().fill(T{0});
}

template <class T>
void reverse_accumulate(const Var<T>& root) {
  if (!root.valid() || root.value().size() != 1) {
    throw ContractViolation("reverse_accumulate: root must be a scalar, got " +
                            (root.valid() ? shape_str(root.shape()) : std::string("null")));
  }
  if (!root.requires_grad()) return;

  // Iterative DFS post-order with tri-colour marking.
  enum class Mark { grey, black };
  std::unordered_map<const Node<T>*, Mark> marks;
  std::vector<Node<T>*> order;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  marks[root.node().get()] = Mark::grey;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (!parent->requires_grad) continue;
      auto it = marks.find(parent);
      if (it == marks.end()) {
        marks.emplace(parent, Mark::grey);
        stack.emplace_back(parent, 0);
      } else if (it->second == Mark::grey) {
        throw ContractViolation("reverse_accumulate: cycle through node '" +
                                std::string(parent->op) + "'");
      }
    } else {
      marks[node] = Mark::black;
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) {
    if (!n->is_leaf()) n->grad = Tensor<T>();
  }
  Node<T>& top = *root.node();
  top.grad_buffer()[0] += T{1};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->is_leaf()) continue;
    const bool reached = n->grad.size() == n->value.size() && n->grad.shape() == n->value.shape();
    if (n->backward && reached) n->backward(*n);
    n->grad = Tensor<T>();
  }
}

template struct Node<float>;
template struct Node<double>;
template class ParamLeaf<float>;
template class ParamLeaf<double>;
template void reverse_accumulate<float>(const Var<float>&);
template void reverse_accumulate<double>(const Var<double>&);

}  // namespace ssmamba::num
