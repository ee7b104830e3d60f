#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgd/tensor.hpp"

namespace kgd::ad {

// A learnable tensor with a gradient accumulator that outlives any tape.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

// Handle to a node recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records primitive ops in execution order; backward() replays them in exact
// reverse order. One tape per forward pass, single-threaded.
class Tape {
 public:
  // Receives the gradient flowing into the node's output.
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value, std::string_view name = "constant");
  // Leaf bound to a parameter; backward() adds into parameter.grad.
  Var parameter(Parameter& p);

  // Used by primitive ops. `inputs` are the nodes the backward rule may
  // propagate to; the node requires grad iff any input does.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             Backward backward);
  Var record(std::string_view op, Tensor value, const std::vector<Var>& inputs,
             Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  std::string_view op(std::size_t id) const { return nodes_[id].op; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer of an input, zero-allocated on first use; nullptr when the
  // input does not require grad.
  Tensor* grad_buffer(std::size_t id);
  // Gradient that reached a node during the last backward() (empty if none).
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // When on, every recorded op validates its output and throws
  // NonFiniteError naming the op. On by default in debug builds.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

  // "op#index" of the first recorded node holding a NaN/Inf, if any.
  std::optional<std::string> first_non_finite() const;

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool check_finite_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace kgd::ad
