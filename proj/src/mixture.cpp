#include "mixact/mixture.hpp"

#include <cmath>

#include "mixact/errors.hpp"
#include "mixact/kernels.hpp"

namespace mixact {

MixtureWeights::MixtureWeights(std::string name)
    : w(Tensor::full({3}, 1.0)), layer_name(std::move(name)) {}

const char* basis_name(int i) {
  switch (i) {
    case 1: return "relu";
    case 2: return "tanh";
    case 3: return "sin";
  }
  throw Error("basis index " + std::to_string(i) + " not in {1,2,3}");
}

Tensor basis_apply(int i, const Tensor& x) {
  Tensor y(x.shape);
  switch (i) {
    case 1: kernels::relu_forward(x.data.data(), y.data.data(), x.size()); break;
    case 2: kernels::tanh_forward(x.data.data(), y.data.data(), x.size()); break;
    case 3: kernels::sin_forward(x.data.data(), y.data.data(), x.size()); break;
    default: throw Error("basis index " + std::to_string(i) + " not in {1,2,3}");
  }
  return y;
}

NodeId basis_eval(Tape& t, int i, NodeId x) {
  switch (i) {
    case 1: return t.relu(x);
    case 2: return t.tanh(x);
    case 3: return t.sin(x);
  }
  throw Error("basis index " + std::to_string(i) + " not in {1,2,3}");
}

SimplexCoords normalize_weights(const MixtureWeights& mw) {
  if (mw.w.size() != 3)
    throw ShapeError("mixture weights must have 3 entries, got " +
                     shape_string(mw.w.shape));
  double s = 0.0;
  for (double v : mw.w.data) {
    if (!(v >= 0.0))  // also rejects NaN
      throw Error("mixture weight " + std::to_string(v) + " is negative (" +
                  mw.layer_name + ")");
    s += v;
  }
  if (!(s > 0.0))
    throw Error("mixture weights sum to " + std::to_string(s) + ", need > 0 (" +
                mw.layer_name + ")");
  SimplexCoords c;
  for (int i = 0; i < 3; ++i) c.p[i] = mw.w.data[i] / s;
  return c;
}

NodeId normalize_weights(Tape& t, NodeId w) {
  if (t.value(w).size() != 3)
    throw ShapeError("mixture weights must have 3 entries, got " +
                     shape_string(t.value(w).shape));
  return t.div_scalar(w, t.sum(w));
}

NodeId mixture_forward(Tape& t, NodeId x, NodeId w) {
  const NodeId p = normalize_weights(t, w);
  const NodeId term1 = t.mul(t.relu(x), t.select(p, 0));
  const NodeId term2 = t.mul(t.tanh(x), t.select(p, 1));
  const NodeId term3 = t.mul(t.sin(x), t.select(p, 2));
  return t.add(t.add(term1, term2), term3);
}

double mixture_eval(const SimplexCoords& c, double x) {
  const double r = x > 0.0 ? x : 0.0;
  return c.p[0] * r + c.p[1] * std::tanh(x) + c.p[2] * std::sin(x);
}

}  // namespace mixact
