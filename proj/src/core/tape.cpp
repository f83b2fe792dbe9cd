#include "ppush/core/tape.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "ppush/core/errors.hpp"

namespace ppush {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_mat(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_mat(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

}  // namespace

Tape::Node& Tape::node(Var v) {
  if (v.index >= nodes_.size()) throw StateError("variable does not belong to this tape");
  return nodes_[v.index];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index >= nodes_.size()) throw StateError("variable does not belong to this tape");
  return nodes_[v.index];
}

Tape::Var Tape::push(Node n) {
  if (consumed_) throw StateError("tape already consumed by backward");
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Tape::Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::parameter(const Tensor& value) {
  Node n;
  n.borrowed = &value;
  n.requires_grad = true;
  return push(std::move(n));
}

Tape::Var Tape::matmul(Var x, Var w) {
  const Tensor& a = value(x);
  const Tensor& b = value(w);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  }
  Node n;
  n.op = Op::MatMul;
  n.lhs = x.index;
  n.rhs = w.index;
  n.requires_grad = node(x).requires_grad || node(w).requires_grad;
  n.owned = Tensor({a.rows(), b.cols()});
  as_mat(n.owned).noalias() = as_mat(a) * as_mat(b);
  return push(std::move(n));
}

Tape::Var Tape::add_bias(Var x, Var bias) {
  const Tensor& a = value(x);
  const Tensor& b = value(bias);
  if (b.numel() != a.cols()) {
    throw DimensionError("bias " + shape_str(b.shape()) + " for activations " +
                         shape_str(a.shape()));
  }
  Node n;
  n.op = Op::AddBias;
  n.lhs = x.index;
  n.rhs = bias.index;
  n.requires_grad = node(x).requires_grad || node(bias).requires_grad;
  n.owned = a;
  n.owned.drop_grad();
  const std::size_t cols = a.cols();
  auto out = n.owned.data();
  auto bv = b.data();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  }
  return push(std::move(n));
}

Tape::Var Tape::activate(Var x, Activation act) {
  Node n;
  n.op = Op::Activate;
  n.lhs = x.index;
  n.act = act;
  n.requires_grad = node(x).requires_grad;
  n.owned = value(x);
  n.owned.drop_grad();
  switch (act) {
    case Activation::Tanh:
      for (double& v : n.owned.data()) v = std::tanh(v);
      break;
    case Activation::Relu:
      for (double& v : n.owned.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Identity:
      break;
  }
  return push(std::move(n));
}

Tape::Var Tape::mse(Var pred, Var label) {
  const Tensor& p = value(pred);
  const Tensor& y = value(label);
  if (p.shape() != y.shape()) {
    throw DimensionError("mse prediction " + shape_str(p.shape()) + " vs label " +
                         shape_str(y.shape()));
  }
  Node n;
  n.op = Op::Mse;
  n.lhs = pred.index;
  n.rhs = label.index;
  n.requires_grad = node(pred).requires_grad || node(label).requires_grad;
  double acc = 0.0;
  auto pv = p.data();
  auto yv = y.data();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - yv[i];
    acc += d * d;
  }
  n.owned = Tensor({1}, acc / static_cast<double>(pv.size()));
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).val(); }

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.has_grad) throw StateError("no gradient recorded for this variable");
  return n.grad;
}

Buffer Tape::take_grad(Var v) {
  Node& n = node(v);
  if (!n.has_grad) throw StateError("no gradient recorded for this variable");
  n.has_grad = false;
  return n.grad.take_values();
}

Tensor& Tape::grad_slot(std::size_t i) {
  Node& n = nodes_[i];
  if (!n.has_grad) {
    n.grad = Tensor(n.val().shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var root) {
  if (consumed_) throw StateError("backward called twice on the same tape");
  if (nodes_.empty()) throw StateError("backward called on an empty tape");
  if (value(root).numel() != 1) {
    throw StateError("backward root must be a scalar, got " +
                     shape_str(value(root).shape()));
  }
  consumed_ = true;
  grad_slot(root.index)[0] = 1.0;

  for (std::size_t idx = root.index + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    if (!n.has_grad || !n.requires_grad || n.op == Op::Leaf) continue;
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::MatMul: {
        const std::size_t li = n.lhs;
        const std::size_t ri = n.rhs;
        if (nodes_[li].requires_grad) {
          Tensor& gx = grad_slot(li);
          as_mat(gx).noalias() += as_mat(g) * as_mat(nodes_[ri].val()).transpose();
        }
        if (nodes_[ri].requires_grad) {
          Tensor& gw = grad_slot(ri);
          as_mat(gw).noalias() += as_mat(nodes_[li].val()).transpose() * as_mat(g);
        }
        break;
      }
      case Op::AddBias: {
        if (nodes_[n.lhs].requires_grad) {
          auto gx = grad_slot(n.lhs).data();
          auto gv = g.data();
          for (std::size_t i = 0; i < gv.size(); ++i) gx[i] += gv[i];
        }
        if (nodes_[n.rhs].requires_grad) {
          auto gb = grad_slot(n.rhs).data();
          const std::size_t cols = gb.size();
          auto gv = g.data();
          for (std::size_t i = 0; i < gv.size(); ++i) gb[i % cols] += gv[i];
        }
        break;
      }
      case Op::Activate: {
        if (!nodes_[n.lhs].requires_grad) break;
        auto gx = grad_slot(n.lhs).data();
        auto gv = g.data();
        auto out = n.owned.data();
        switch (n.act) {
          case Activation::Tanh:
            for (std::size_t i = 0; i < gv.size(); ++i) gx[i] += gv[i] * (1.0 - out[i] * out[i]);
            break;
          case Activation::Relu:
            for (std::size_t i = 0; i < gv.size(); ++i) gx[i] += out[i] > 0.0 ? gv[i] : 0.0;
            break;
          case Activation::Identity:
            for (std::size_t i = 0; i < gv.size(); ++i) gx[i] += gv[i];
            break;
        }
        break;
      }
      case Op::Mse: {
        const Tensor& p = nodes_[n.lhs].val();
        const Tensor& y = nodes_[n.rhs].val();
        const double scale = 2.0 * g[0] / static_cast<double>(p.numel());
        auto pv = p.data();
        auto yv = y.data();
        if (nodes_[n.lhs].requires_grad) {
          auto gp = grad_slot(n.lhs).data();
          for (std::size_t i = 0; i < pv.size(); ++i) gp[i] += scale * (pv[i] - yv[i]);
        }
        if (nodes_[n.rhs].requires_grad) {
          auto gy = grad_slot(n.rhs).data();
          for (std::size_t i = 0; i < pv.size(); ++i) gy[i] -= scale * (pv[i] - yv[i]);
        }
        break;
      }
      case Op::Leaf:
        break;
    }
  }
}

}  // namespace ppush
