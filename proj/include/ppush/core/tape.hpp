#pragma once

#include <cstddef>
#include <vector>

#include "ppush/core/tensor.hpp"

namespace ppush {

enum class Activation { Tanh, Relu, Identity };

/// Reverse-mode autodiff tape over dense matrices.
///
/// Nodes are appended in evaluation order, so the tape is already a
/// topological order and backward is a single reverse sweep. Leaves created
/// with `parameter` reference caller-owned tensors which must outlive the
/// tape. A tape supports exactly one `backward`; afterwards it is consumed.
class Tape {
 public:
  struct Var {
    std::size_t index;
  };

  /// Owned leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Borrowed leaf that receives a gradient.
  Var parameter(const Tensor& value);

  Var matmul(Var x, Var w);       // [b x i] * [i x o]
  Var add_bias(Var x, Var bias);  // [b x o] + row-broadcast [o]
  Var activate(Var x, Activation act);
  Var mse(Var pred, Var label);  // scalar mean of squared differences

  const Tensor& value(Var v) const;
  /// Gradient of the backward root w.r.t. `v`; only valid after backward.
  const Tensor& grad(Var v) const;
  /// Moves the gradient out of the tape.
  Buffer take_grad(Var v);

  /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse.
  void backward(Var root);

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  enum class Op { Leaf, MatMul, AddBias, Activate, Mse };

  struct Node {
    Op op = Op::Leaf;
    Tensor owned;
    const Tensor* borrowed = nullptr;
    bool requires_grad = false;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    Activation act = Activation::Identity;
    Tensor grad;
    bool has_grad = false;

    const Tensor& val() const { return borrowed ? *borrowed : owned; }
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Node n);
  Tensor& grad_slot(std::size_t i);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace ppush
