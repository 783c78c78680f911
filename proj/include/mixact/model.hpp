#pragma once

#include <cstdint>
#include <vector>

#include "mixact/mixture.hpp"
#include "mixact/optim.hpp"
#include "mixact/tape.hpp"
#include "mixact/tensor.hpp"

namespace mixact {

// Architecture knobs. Defaults give the full model; gradcheck uses the
// reduced one. Spatial flow for 28x28 input: conv(3x3,s1,p1) -> act -> pool2
// -> conv -> act -> pool2 -> flatten -> dense -> act -> dense.
struct ModelDims {
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t hidden = 128;
  std::size_t classes = 10;
  std::size_t image = 28;  // square input side; must be divisible by 4
  std::size_t ksize = 3;
  std::size_t pad = 1;

  std::size_t flat() const { return conv2_channels * (image / 4) * (image / 4); }
  // Small enough that finite-difference audits touch every parameter quickly;
  // the 4x4 input keeps the pre-activation count low so a batch with clear
  // margins around the relu/pool decision points exists (see
  // perturbation_margins_ok).
  static ModelDims reduced() {
    ModelDims d;
    d.conv1_channels = 2;
    d.conv2_channels = 4;
    d.hidden = 16;
    d.image = 4;
    return d;
  }
};

struct ConvParams {
  Tensor kernel;  // [out_ch, in_ch, k, k]
  Tensor bias;    // [out_ch]
};

struct DenseParams {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct Model {
  ModelDims dims;
  ConvParams conv1, conv2;
  DenseParams fc1, fc2;
  MixtureWeights act1{"act1"}, act2{"act2"}, act3{"act3"};

  // Fixed enumeration order; checkpoints and the optimizer rely on it.
  std::vector<ParamRef> parameters();
  // "backbone" = convs + dense layers, "mixture" = the three w vectors.
  std::vector<Tensor*> group(const std::string& name);
};

// Seeded init: backbone weights uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)),
// biases zero, mixture weights 1.0. Same seed, same bits.
Model build_model(std::uint64_t seed, const ModelDims& dims = {});

std::size_t parameter_count(Model& m);

void set_trainable(Model& m, const std::string& group, bool trainable);

// Records the full forward pass; batch must be [n, 1, image, image] with
// values in [0,1]. Returns the [n, classes] logits node.
NodeId model_forward(Tape& t, Model& m, NodeId batch);

// Convenience forward pass for evaluation (no gradients kept).
Tensor eval_logits(Model& m, const Tensor& batch);

// True when every pre-activation in the forward pass over `batch` stays at
// least z_margin away from zero and the top two values in every pool window
// differ by at least gap_margin. Central finite differences need such a
// batch: a perturbation that drags a pre-activation across the relu kink or
// flips a pool argmax makes the numeric derivative disagree with the
// (correct) analytic one, so difference-based audits reject batches where
// any decision point sits closer than the perturbation can reach.
bool perturbation_margins_ok(Model& m, const Tensor& batch, double z_margin,
                             double gap_margin);

}  // namespace mixact
