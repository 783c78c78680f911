#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mixact/tensor.hpp"

namespace mixact {

using NodeId = std::size_t;

// Reverse-mode autodiff tape over Tensors. Recording an op appends a node
// holding the forward value, the ids of its inputs, and a backward rule;
// creation order is a topological order, so backward() is a single reverse
// sweep that accumulates adjoints additively across fan-out. A node carries a
// gradient only if it needs one (a bound parameter with requires_grad, or any
// node downstream of one). Leaves made with param() push their accumulated
// gradient back into the bound Tensor's grad at the end of the sweep.
class Tape {
 public:
  // leaves
  NodeId constant(Tensor value);   // never differentiated
  NodeId param(Tensor& t);         // copies values, remembers &t for grad write-back

  // linear algebra
  NodeId matmul(NodeId a, NodeId b);                       // [m,k]@[k,n]
  NodeId add_rowvec(NodeId x, NodeId b);                   // [n,k] + [k] per row
  NodeId conv2d(NodeId x, NodeId kernel, NodeId bias,
                std::size_t stride, std::size_t pad);      // NCHW

  // elementwise; binary forms take matching shapes or a 1-element operand
  NodeId relu(NodeId x);
  NodeId tanh(NodeId x);
  NodeId sin(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId div_scalar(NodeId x, NodeId s);  // s must be a 1-element node

  // shape / indexing
  NodeId reshape(NodeId x, std::vector<std::size_t> new_shape);
  NodeId select(NodeId x, std::size_t index);  // 1-element view of x[index]

  // reductions
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);
  NodeId maxpool2(NodeId x);  // 2x2 stride 2, NCHW, even spatial dims

  // fused loss: mean softmax cross-entropy over rows of [n,k] logits
  NodeId softmax_cross_entropy(NodeId logits, const std::vector<int>& labels);

  // Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse creation order.
  // loss must be a 1-element node on this tape.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const;
  const std::vector<double>& grad(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    Tensor* bound = nullptr;   // param leaves only
    std::vector<NodeId> inputs;
    std::function<void(Tape&, NodeId)> pull;  // backward rule; null for leaves
  };

  NodeId push(Node n);
  Node& at(NodeId id);
  const Node& at(NodeId id) const;

  std::vector<Node> nodes_;
};

}  // namespace mixact
