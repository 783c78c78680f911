#include "mixact/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mixact/errors.hpp"

namespace mixact {

std::vector<ParamRef> Model::parameters() {
  return {
      {"conv1.kernel", &conv1.kernel, false}, {"conv1.bias", &conv1.bias, false},
      {"conv2.kernel", &conv2.kernel, false}, {"conv2.bias", &conv2.bias, false},
      {"fc1.weight", &fc1.weight, false},     {"fc1.bias", &fc1.bias, false},
      {"fc2.weight", &fc2.weight, false},     {"fc2.bias", &fc2.bias, false},
      {"act1.w", &act1.w, true},              {"act2.w", &act2.w, true},
      {"act3.w", &act3.w, true},
  };
}

std::vector<Tensor*> Model::group(const std::string& name) {
  if (name == "backbone")
    return {&conv1.kernel, &conv1.bias, &conv2.kernel, &conv2.bias,
            &fc1.weight,   &fc1.bias,   &fc2.weight,   &fc2.bias};
  if (name == "mixture") return {&act1.w, &act2.w, &act3.w};
  throw Error("unknown parameter group '" + name + "' (want backbone or mixture)");
}

Model build_model(std::uint64_t seed, const ModelDims& dims) {
  if (dims.image % 4 != 0)
    throw ConfigError("model: image side " + std::to_string(dims.image) +
                      " must be divisible by 4");
  Model m;
  m.dims = dims;
  std::mt19937_64 rng(seed);
  auto init_uniform = [&rng](Tensor& t, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / (double)fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
  };
  const std::size_t k = dims.ksize;

  m.conv1.kernel = Tensor({dims.conv1_channels, 1, k, k});
  init_uniform(m.conv1.kernel, 1 * k * k);
  m.conv1.bias = Tensor({dims.conv1_channels});

  m.conv2.kernel = Tensor({dims.conv2_channels, dims.conv1_channels, k, k});
  init_uniform(m.conv2.kernel, dims.conv1_channels * k * k);
  m.conv2.bias = Tensor({dims.conv2_channels});

  m.fc1.weight = Tensor({dims.flat(), dims.hidden});
  init_uniform(m.fc1.weight, dims.flat());
  m.fc1.bias = Tensor({dims.hidden});

  m.fc2.weight = Tensor({dims.hidden, dims.classes});
  init_uniform(m.fc2.weight, dims.hidden);
  m.fc2.bias = Tensor({dims.classes});

  m.act1 = MixtureWeights("act1");
  m.act2 = MixtureWeights("act2");
  m.act3 = MixtureWeights("act3");
  return m;
}

std::size_t parameter_count(Model& m) {
  std::size_t n = 0;
  for (const ParamRef& p : m.parameters()) n += p.tensor->size();
  return n;
}

void set_trainable(Model& m, const std::string& group, bool trainable) {
  for (Tensor* t : m.group(group)) t->requires_grad = trainable;
}

NodeId model_forward(Tape& t, Model& m, NodeId batch) {
  const Tensor& X = t.value(batch);
  if (X.rank() != 4 || X.shape[1] != 1 || X.shape[2] != m.dims.image ||
      X.shape[3] != m.dims.image)
    throw ShapeError("model_forward expects [n,1," + std::to_string(m.dims.image) + "," +
                     std::to_string(m.dims.image) + "] input, got " +
                     shape_string(X.shape));
  const std::size_t n = X.shape[0];

  NodeId h = t.conv2d(batch, t.param(m.conv1.kernel), t.param(m.conv1.bias), 1, m.dims.pad);
  h = mixture_forward(t, h, t.param(m.act1.w));
  h = t.maxpool2(h);

  h = t.conv2d(h, t.param(m.conv2.kernel), t.param(m.conv2.bias), 1, m.dims.pad);
  h = mixture_forward(t, h, t.param(m.act2.w));
  h = t.maxpool2(h);

  h = t.reshape(h, {n, m.dims.flat()});
  h = t.add_rowvec(t.matmul(h, t.param(m.fc1.weight)), t.param(m.fc1.bias));
  h = mixture_forward(t, h, t.param(m.act3.w));
  h = t.add_rowvec(t.matmul(h, t.param(m.fc2.weight)), t.param(m.fc2.bias));
  return h;
}

Tensor eval_logits(Model& m, const Tensor& batch) {
  Tape t;
  const NodeId logits = model_forward(t, m, t.constant(batch));
  return t.value(logits);
}

namespace {

bool away_from_zero(const Tensor& v, double margin) {
  for (double x : v.data) {
    if (std::abs(x) < margin) return false;
  }
  return true;
}

bool pool_gaps_ok(const Tensor& a, double margin) {
  const std::size_t n = a.shape[0], c = a.shape[1];
  const std::size_t h = a.shape[2], w = a.shape[3];
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* plane = a.data.data() + (img * c + ch) * h * w;
      for (std::size_t oy = 0; oy < h / 2; ++oy) {
        for (std::size_t ox = 0; ox < w / 2; ++ox) {
          const double v0 = plane[(2 * oy) * w + 2 * ox];
          const double v1 = plane[(2 * oy) * w + 2 * ox + 1];
          const double v2 = plane[(2 * oy + 1) * w + 2 * ox];
          const double v3 = plane[(2 * oy + 1) * w + 2 * ox + 1];
          double top = v0, second = -std::numeric_limits<double>::infinity();
          for (double v : {v1, v2, v3}) {
            if (v > top) {
              second = top;
              top = v;
            } else if (v > second) {
              second = v;
            }
          }
          if (top - second < margin) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace

bool perturbation_margins_ok(Model& m, const Tensor& batch, double z_margin,
                             double gap_margin) {
  Tape t;
  const NodeId x = t.constant(batch);
  const std::size_t n = batch.shape[0];

  const NodeId z1 =
      t.conv2d(x, t.param(m.conv1.kernel), t.param(m.conv1.bias), 1, m.dims.pad);
  const NodeId a1 = mixture_forward(t, z1, t.param(m.act1.w));
  const NodeId p1 = t.maxpool2(a1);

  const NodeId z2 =
      t.conv2d(p1, t.param(m.conv2.kernel), t.param(m.conv2.bias), 1, m.dims.pad);
  const NodeId a2 = mixture_forward(t, z2, t.param(m.act2.w));
  const NodeId p2 = t.maxpool2(a2);

  const NodeId flat = t.reshape(p2, {n, m.dims.flat()});
  const NodeId z3 =
      t.add_rowvec(t.matmul(flat, t.param(m.fc1.weight)), t.param(m.fc1.bias));

  return away_from_zero(t.value(z1), z_margin) &&
         away_from_zero(t.value(z2), z_margin) &&
         away_from_zero(t.value(z3), z_margin) &&
         pool_gaps_ok(t.value(a1), gap_margin) &&
         pool_gaps_ok(t.value(a2), gap_margin);
}

}  // namespace mixact
