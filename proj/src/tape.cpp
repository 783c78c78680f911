#include "mixact/tape.hpp"

#include <cmath>
#include <utility>

#include "mixact/errors.hpp"
#include "mixact/kernels.hpp"

namespace mixact {

namespace {

// fixed-order serial reductions used by scalar-operand backward rules
double dot_serial(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum_serial(const std::vector<double>& a) {
  double acc = 0.0;
  for (double v : a) acc += v;
  return acc;
}

enum class BinKind { Same, ScalarRhs, ScalarLhs };

}  // namespace

NodeId Tape::push(Node n) {
  if (n.requires_grad) n.grad.assign(n.value.size(), 0.0);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Tape::Node& Tape::at(NodeId id) { return nodes_.at(id); }
const Tape::Node& Tape::at(NodeId id) const { return nodes_.at(id); }

const Tensor& Tape::value(NodeId id) const { return at(id).value; }
const std::vector<double>& Tape::grad(NodeId id) const { return at(id).grad; }
bool Tape::requires_grad(NodeId id) const { return at(id).requires_grad; }

NodeId Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::param(Tensor& t) {
  Node n;
  n.value = Tensor(t.shape, t.data);  // grad-free copy of the current values
  n.requires_grad = t.requires_grad;
  n.bound = &t;
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& A = at(a).value;
  const Tensor& B = at(b).value;
  if (A.rank() != 2 || B.rank() != 2 || A.shape[1] != B.shape[0])
    throw ShapeError("matmul shape mismatch: " + shape_string(A.shape) + " x " +
                     shape_string(B.shape));
  const std::size_t m = A.shape[0], k = A.shape[1], nn = B.shape[1];
  Node n;
  n.value = Tensor({m, nn});
  kernels::matmul(A.data.data(), B.data.data(), n.value.data.data(), m, k, nn);
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.inputs = {a, b};
  n.pull = [a, b, m, k, nn](Tape& t, NodeId self) {
    const auto& g = t.at(self).grad;
    Node& A_ = t.at(a);
    Node& B_ = t.at(b);
    if (A_.requires_grad)
      kernels::matmul_grad_a_acc(g.data(), B_.value.data.data(), A_.grad.data(), m, k, nn);
    if (B_.requires_grad)
      kernels::matmul_grad_b_acc(A_.value.data.data(), g.data(), B_.grad.data(), m, k, nn);
  };
  return push(std::move(n));
}

NodeId Tape::add_rowvec(NodeId x, NodeId b) {
  const Tensor& X = at(x).value;
  const Tensor& B = at(b).value;
  if (X.rank() != 2 || B.rank() != 1 || B.shape[0] != X.shape[1])
    throw ShapeError("add_rowvec shape mismatch: " + shape_string(X.shape) + " + " +
                     shape_string(B.shape));
  const std::size_t rows = X.shape[0], cols = X.shape[1];
  Node n;
  n.value = Tensor(X.shape);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      n.value.data[i * cols + j] = X.data[i * cols + j] + B.data[j];
  n.requires_grad = at(x).requires_grad || at(b).requires_grad;
  n.inputs = {x, b};
  n.pull = [x, b, rows, cols](Tape& t, NodeId self) {
    const auto& g = t.at(self).grad;
    Node& X_ = t.at(x);
    Node& B_ = t.at(b);
    if (X_.requires_grad) kernels::acc(g.data(), X_.grad.data(), g.size());
    if (B_.requires_grad) kernels::colsum_acc(g.data(), rows, cols, B_.grad.data());
  };
  return push(std::move(n));
}

NodeId Tape::conv2d(NodeId x, NodeId kernel, NodeId bias,
                    std::size_t stride, std::size_t pad) {
  const Tensor& X = at(x).value;
  const Tensor& K = at(kernel).value;
  const Tensor& B = at(bias).value;
  if (X.rank() != 4 || K.rank() != 4)
    throw ShapeError("conv2d expects 4-d input and kernel, got " + shape_string(X.shape) +
                     " and " + shape_string(K.shape));
  if (X.shape[1] != K.shape[1])
    throw ShapeError("conv2d channel mismatch: input " + shape_string(X.shape) +
                     " vs kernel " + shape_string(K.shape));
  if (B.rank() != 1 || B.shape[0] != K.shape[0])
    throw ShapeError("conv2d bias shape " + shape_string(B.shape) + " does not match " +
                     std::to_string(K.shape[0]) + " filters");
  const Conv2dShape s = conv2d_shape(X.shape[0], X.shape[1], X.shape[2], X.shape[3],
                                     K.shape[0], K.shape[2], K.shape[3], stride, pad);
  Node n;
  n.value = Tensor({s.n, s.f, s.oh, s.ow});
  kernels::conv2d_forward(X.data.data(), K.data.data(), B.data.data(),
                          n.value.data.data(), s);
  n.requires_grad =
      at(x).requires_grad || at(kernel).requires_grad || at(bias).requires_grad;
  n.inputs = {x, kernel, bias};
  n.pull = [x, kernel, bias, s](Tape& t, NodeId self) {
    const auto& g = t.at(self).grad;
    Node& X_ = t.at(x);
    Node& K_ = t.at(kernel);
    Node& B_ = t.at(bias);
    if (X_.requires_grad)
      kernels::conv2d_grad_input_acc(g.data(), K_.value.data.data(), X_.grad.data(), s);
    if (K_.requires_grad)
      kernels::conv2d_grad_kernel_acc(g.data(), X_.value.data.data(), K_.grad.data(), s);
    if (B_.requires_grad) kernels::conv2d_grad_bias_acc(g.data(), B_.grad.data(), s);
  };
  return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
  const Tensor& X = at(x).value;
  Node n;
  n.value = Tensor(X.shape);
  kernels::relu_forward(X.data.data(), n.value.data.data(), X.size());
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (X_.requires_grad)
      kernels::relu_backward_acc(X_.value.data.data(), t.at(self).grad.data(),
                                 X_.grad.data(), X_.value.size());
  };
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId x) {
  const Tensor& X = at(x).value;
  Node n;
  n.value = Tensor(X.shape);
  kernels::tanh_forward(X.data.data(), n.value.data.data(), X.size());
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (X_.requires_grad)
      kernels::tanh_backward_acc(t.at(self).value.data.data(), t.at(self).grad.data(),
                                 X_.grad.data(), X_.value.size());
  };
  return push(std::move(n));
}

NodeId Tape::sin(NodeId x) {
  const Tensor& X = at(x).value;
  Node n;
  n.value = Tensor(X.shape);
  kernels::sin_forward(X.data.data(), n.value.data.data(), X.size());
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (X_.requires_grad)
      kernels::sin_backward_acc(X_.value.data.data(), t.at(self).grad.data(),
                                X_.grad.data(), X_.value.size());
  };
  return push(std::move(n));
}

static BinKind bin_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape == b.shape) return BinKind::Same;
  if (b.size() == 1) return BinKind::ScalarRhs;
  if (a.size() == 1) return BinKind::ScalarLhs;
  throw ShapeError(std::string(op) + " shape mismatch: " + shape_string(a.shape) + " vs " +
                   shape_string(b.shape));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& A = at(a).value;
  const Tensor& B = at(b).value;
  const BinKind kind = bin_kind(A, B, "add");
  Node n;
  switch (kind) {
    case BinKind::Same:
      n.value = Tensor(A.shape);
      kernels::add(A.data.data(), B.data.data(), n.value.data.data(), A.size());
      break;
    case BinKind::ScalarRhs: {
      n.value = Tensor(A.shape);
      const double s = B.data[0];
      for (std::size_t i = 0; i < A.size(); ++i) n.value.data[i] = A.data[i] + s;
      break;
    }
    case BinKind::ScalarLhs: {
      n.value = Tensor(B.shape);
      const double s = A.data[0];
      for (std::size_t i = 0; i < B.size(); ++i) n.value.data[i] = s + B.data[i];
      break;
    }
  }
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.inputs = {a, b};
  n.pull = [a, b, kind](Tape& t, NodeId self) {
    const auto& g = t.at(self).grad;
    Node& A_ = t.at(a);
    Node& B_ = t.at(b);
    if (A_.requires_grad) {
      if (kind == BinKind::ScalarLhs)
        A_.grad[0] += sum_serial(g);
      else
        kernels::acc(g.data(), A_.grad.data(), g.size());
    }
    if (B_.requires_grad) {
      if (kind == BinKind::ScalarRhs)
        B_.grad[0] += sum_serial(g);
      else
        kernels::acc(g.data(), B_.grad.data(), g.size());
    }
  };
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& A = at(a).value;
  const Tensor& B = at(b).value;
  const BinKind kind = bin_kind(A, B, "mul");
  Node n;
  switch (kind) {
    case BinKind::Same:
      n.value = Tensor(A.shape);
      kernels::mul(A.data.data(), B.data.data(), n.value.data.data(), A.size());
      break;
    case BinKind::ScalarRhs:
      n.value = Tensor(A.shape);
      kernels::scale(A.data.data(), B.data[0], n.value.data.data(), A.size());
      break;
    case BinKind::ScalarLhs:
      n.value = Tensor(B.shape);
      kernels::scale(B.data.data(), A.data[0], n.value.data.data(), B.size());
      break;
  }
  n.requires_grad = at(a).requires_grad || at(b).requires_grad;
  n.inputs = {a, b};
  n.pull = [a, b, kind](Tape& t, NodeId self) {
    const auto& g = t.at(self).grad;
    Node& A_ = t.at(a);
    Node& B_ = t.at(b);
    switch (kind) {
      case BinKind::Same:
        if (A_.requires_grad)
          kernels::acc_mul(g.data(), B_.value.data.data(), A_.grad.data(), g.size());
        if (B_.requires_grad)
          kernels::acc_mul(g.data(), A_.value.data.data(), B_.grad.data(), g.size());
        break;
      case BinKind::ScalarRhs:
        if (A_.requires_grad)
          kernels::acc_scaled(g.data(), B_.value.data[0], A_.grad.data(), g.size());
        if (B_.requires_grad) B_.grad[0] += dot_serial(g, A_.value.data);
        break;
      case BinKind::ScalarLhs:
        if (B_.requires_grad)
          kernels::acc_scaled(g.data(), A_.value.data[0], B_.grad.data(), g.size());
        if (A_.requires_grad) A_.grad[0] += dot_serial(g, B_.value.data);
        break;
    }
  };
  return push(std::move(n));
}

NodeId Tape::scale(NodeId x, double c) {
  const Tensor& X = at(x).value;
  Node n;
  n.value = Tensor(X.shape);
  kernels::scale(X.data.data(), c, n.value.data.data(), X.size());
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x, c](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (X_.requires_grad)
      kernels::acc_scaled(t.at(self).grad.data(), c, X_.grad.data(), X_.grad.size());
  };
  return push(std::move(n));
}

NodeId Tape::div_scalar(NodeId x, NodeId s) {
  const Tensor& X = at(x).value;
  const Tensor& S = at(s).value;
  if (S.size() != 1)
    throw ShapeError("div_scalar divisor must be a 1-element tensor, got " +
                     shape_string(S.shape));
  const double sv = S.data[0];
  if (sv == 0.0) throw NumericError("div_scalar: division by zero");
  Node n;
  n.value = Tensor(X.shape);
  kernels::scale(X.data.data(), 1.0 / sv, n.value.data.data(), X.size());
  n.requires_grad = at(x).requires_grad || at(s).requires_grad;
  n.inputs = {x, s};
  n.pull = [x, s, sv](Tape& t, NodeId self) {
    const auto& g = t.at(self).grad;
    Node& X_ = t.at(x);
    Node& S_ = t.at(s);
    if (X_.requires_grad) kernels::acc_scaled(g.data(), 1.0 / sv, X_.grad.data(), g.size());
    if (S_.requires_grad) S_.grad[0] += -dot_serial(g, X_.value.data) / (sv * sv);
  };
  return push(std::move(n));
}

NodeId Tape::reshape(NodeId x, std::vector<std::size_t> new_shape) {
  const Tensor& X = at(x).value;
  if (shape_product(new_shape) != X.size())
    throw ShapeError("reshape from " + shape_string(X.shape) + " to " +
                     shape_string(new_shape) + " changes element count");
  Node n;
  n.value = Tensor(std::move(new_shape), X.data);
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (X_.requires_grad)
      kernels::acc(t.at(self).grad.data(), X_.grad.data(), X_.grad.size());
  };
  return push(std::move(n));
}

NodeId Tape::select(NodeId x, std::size_t index) {
  const Tensor& X = at(x).value;
  if (index >= X.size())
    throw ShapeError("select index " + std::to_string(index) + " out of range for " +
                     shape_string(X.shape));
  Node n;
  n.value = Tensor::scalar(X.data[index]);
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x, index](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (X_.requires_grad) X_.grad[index] += t.at(self).grad[0];
  };
  return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
  const Tensor& X = at(x).value;
  Node n;
  n.value = Tensor::scalar(sum_serial(X.data));
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (!X_.requires_grad) return;
    const double g0 = t.at(self).grad[0];
    double* dst = X_.grad.data();
    const std::size_t count = X_.grad.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < count; ++i) dst[i] += g0;
  };
  return push(std::move(n));
}

NodeId Tape::mean(NodeId x) {
  const Tensor& X = at(x).value;
  if (X.size() == 0) throw ShapeError("mean of an empty tensor");
  const std::size_t count = X.size();
  Node n;
  n.value = Tensor::scalar(sum_serial(X.data) / (double)count);
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x, count](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (!X_.requires_grad) return;
    const double g0 = t.at(self).grad[0] / (double)count;
    double* dst = X_.grad.data();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < count; ++i) dst[i] += g0;
  };
  return push(std::move(n));
}

NodeId Tape::maxpool2(NodeId x) {
  const Tensor& X = at(x).value;
  if (X.rank() != 4)
    throw ShapeError("maxpool2 expects a 4-d tensor, got " + shape_string(X.shape));
  const std::size_t nn = X.shape[0], c = X.shape[1], h = X.shape[2], w = X.shape[3];
  if (h % 2 != 0 || w % 2 != 0)
    throw Error("maxpool2: odd spatial dims " + shape_string(X.shape));
  Node n;
  n.value = Tensor({nn, c, h / 2, w / 2});
  std::vector<std::size_t> argmax(n.value.size());
  kernels::maxpool2_forward(X.data.data(), n.value.data.data(), argmax.data(), nn, c, h, w);
  n.requires_grad = at(x).requires_grad;
  n.inputs = {x};
  n.pull = [x, am = std::move(argmax)](Tape& t, NodeId self) {
    Node& X_ = t.at(x);
    if (X_.requires_grad)
      kernels::maxpool2_backward_acc(t.at(self).grad.data(), am.data(), X_.grad.data(),
                                     am.size());
  };
  return push(std::move(n));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, const std::vector<int>& labels) {
  const Tensor& Z = at(logits).value;
  if (Z.rank() != 2)
    throw ShapeError("softmax_cross_entropy expects 2-d logits, got " + shape_string(Z.shape));
  const std::size_t nn = Z.shape[0], k = Z.shape[1];
  if (labels.size() != nn)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(nn) + " rows");
  for (int lb : labels)
    if (lb < 0 || (std::size_t)lb >= k)
      throw Error("softmax_cross_entropy: label " + std::to_string(lb) +
                  " out of range [0," + std::to_string(k) + ")");
  Node n;
  std::vector<double> probs(nn * k);
  double loss = 0.0;
  kernels::softmax_ce_forward(Z.data.data(), labels.data(), nn, k, probs.data(), &loss);
  n.value = Tensor::scalar(loss);
  n.requires_grad = at(logits).requires_grad;
  n.inputs = {logits};
  n.pull = [logits, nn, k, p = std::move(probs), lb = labels](Tape& t, NodeId self) {
    Node& Z_ = t.at(logits);
    if (Z_.requires_grad)
      kernels::softmax_ce_backward_acc(p.data(), lb.data(), nn, k, t.at(self).grad[0],
                                       Z_.grad.data());
  };
  return push(std::move(n));
}

void Tape::backward(NodeId loss) {
  if (loss >= nodes_.size()) throw Error("backward: node id not on this tape");
  Node& L = nodes_[loss];
  if (L.value.size() != 1)
    throw Error("backward requires a scalar loss, got shape " + shape_string(L.value.shape));
  if (!L.requires_grad) return;  // nothing reachable wants a gradient
  L.grad.assign(1, 1.0);
  for (std::size_t i = loss + 1; i-- > 0;) {
    Node& nd = nodes_[i];
    if (!nd.requires_grad) continue;
    if (nd.pull) {
      nd.pull(*this, i);
    } else if (nd.bound && nd.bound->requires_grad) {
      nd.bound->ensure_grad();
      for (std::size_t j = 0; j < nd.grad.size(); ++j) nd.bound->grad[j] += nd.grad[j];
    }
  }
}

}  // namespace mixact
