#pragma once

#include <array>
#include <string>

#include "mixact/tape.hpp"
#include "mixact/tensor.hpp"

namespace mixact {

// Training-path floor for raw mixture weights: projection clamps every w_i to
// at least this after each optimizer step, so the normalizing sum stays
// safely positive. Analysis/report paths accept any w >= 0 with sum(w) > 0.
inline constexpr double kWeightFloor = 1e-6;

// One learnable activation: A(x) = P1*relu(x) + P2*tanh(x) + P3*sin(x),
// P_i = w_i / sum(w). Raw weights are stored; P is derived on every use,
// never stored. Fresh weights start at 1.0 (uniform P = 1/3).
struct MixtureWeights {
  Tensor w;  // shape [3]
  std::string layer_name;

  MixtureWeights() : MixtureWeights("act") {}
  explicit MixtureWeights(std::string name);
};

struct SimplexCoords {
  std::array<double, 3> p{};
  double sum() const { return p[0] + p[1] + p[2]; }
};

// basis index i is 1-based: 1 = relu, 2 = tanh, 3 = sin
Tensor basis_apply(int i, const Tensor& x);
NodeId basis_eval(Tape& t, int i, NodeId x);
const char* basis_name(int i);

// Plain normalization for analysis/report. Requires w_i >= 0 and sum(w) > 0.
SimplexCoords normalize_weights(const MixtureWeights& mw);

// Differentiable normalization on the tape: P = w / sum(w). Gradients flow
// into w through both the numerator and the shared sum (quotient rule).
NodeId normalize_weights(Tape& t, NodeId w);

// A(x) on the tape; w is a 3-element node (typically tape.param of a
// MixtureWeights tensor).
NodeId mixture_forward(Tape& t, NodeId x, NodeId w);

// Scalar A(x) without a tape, for curve sampling and fitting.
double mixture_eval(const SimplexCoords& coords, double x);

}  // namespace mixact
