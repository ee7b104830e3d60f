#include "kgd/tape.hpp"

#include "kgd/error.hpp"

namespace kgd::ad {

Tape::Tape() {
#ifdef NDEBUG
  check_finite_ = false;
#else
  check_finite_ = true;
#endif
}

Var Tape::push(Node node) {
  if (check_finite_ && !node.value.all_finite()) {
    throw NonFiniteError("non-finite output from op '" + std::string(node.op) + "' (node " +
                         std::to_string(nodes_.size()) + ")");
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value, std::string_view name) {
  Node n;
  n.op = name;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.op = "parameter";
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                 Backward backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape() != this) throw Error(std::string(op) + ": input recorded on another tape");
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Tensor value, const std::vector<Var>& inputs,
                 Backward backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape() != this) throw Error(std::string(op) + ": input recorded on another tape");
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error("backward: loss recorded on another tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
  }
  if (backward_done_) throw Error("backward: tape already consumed");
  backward_done_ = true;

  if (Tensor* g = grad_buffer(loss.id())) (*g)[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (!n.param || n.grad.empty()) continue;
    Tensor& acc = n.param->grad;
    if (acc.shape() != n.param->value.shape()) acc = Tensor(n.param->value.shape());
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += n.grad[k];
  }
}

std::optional<std::string> Tape::first_non_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].value.all_finite()) {
      return std::string(nodes_[i].op) + "#" + std::to_string(i);
    }
  }
  return std::nullopt;
}

}  // namespace kgd::ad
