#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "mixact/errors.hpp"
#include "mixact/model.hpp"
#include "mixact/reference.hpp"
#include "mixact/tape.hpp"

using namespace mixact;

namespace {

Tensor random_batch(std::mt19937_64& rng, std::size_t n, std::size_t image) {
  std::uniform_real_distribution<double> pixel(0.0, 1.0);
  Tensor t({n, 1, image, image});
  for (double& v : t.data) v = pixel(rng);
  return t;
}

}  // namespace

TEST_CASE("the full model has the expected parameter count and shapes") {
  Model m = build_model(42);
  CHECK(parameter_count(m) == 103027);

  const auto params = m.parameters();
  REQUIRE(params.size() == 11);
  CHECK(params[0].name == "conv1.kernel");
  CHECK(params[8].name == "act1.w");
  CHECK(params[8].nonneg_floor);
  CHECK_FALSE(params[0].nonneg_floor);

  CHECK(m.conv1.kernel.shape == std::vector<std::size_t>{8, 1, 3, 3});
  CHECK(m.conv2.kernel.shape == std::vector<std::size_t>{16, 8, 3, 3});
  CHECK(m.fc1.weight.shape == std::vector<std::size_t>{784, 128});
  CHECK(m.fc2.weight.shape == std::vector<std::size_t>{128, 10});
  CHECK(m.act1.w.shape == std::vector<std::size_t>{3});

  CHECK(m.group("backbone").size() == 8);
  CHECK(m.group("mixture").size() == 3);
  CHECK_THROWS_AS(m.group("everything"), Error);
}

TEST_CASE("initialization is seed-deterministic with documented ranges") {
  Model a = build_model(7);
  Model b = build_model(7);
  Model c = build_model(8);

  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool any_differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i].tensor->data.size() == pb[i].tensor->data.size());
    CHECK(std::memcmp(pa[i].tensor->data.data(), pb[i].tensor->data.data(),
                      pa[i].tensor->data.size() * sizeof(double)) == 0);
    if (std::memcmp(pa[i].tensor->data.data(), pc[i].tensor->data.data(),
                    pa[i].tensor->data.size() * sizeof(double)) != 0)
      any_differs = true;
  }
  CHECK(any_differs);

  for (double v : a.conv1.bias.data) CHECK(v == 0.0);
  for (double v : a.fc2.bias.data) CHECK(v == 0.0);
  for (double v : a.act1.w.data) CHECK(v == 1.0);

  const double conv1_bound = std::sqrt(1.0 / 9.0);
  for (double v : a.conv1.kernel.data) CHECK(std::fabs(v) <= conv1_bound);
  const double fc1_bound = std::sqrt(1.0 / 784.0);
  for (double v : a.fc1.weight.data) CHECK(std::fabs(v) <= fc1_bound);
}

TEST_CASE("group freezing flips the trainable flag") {
  Model m = build_model(1);
  set_trainable(m, "backbone", true);
  set_trainable(m, "mixture", false);
  CHECK(m.conv1.kernel.requires_grad);
  CHECK(m.fc2.bias.requires_grad);
  CHECK_FALSE(m.act1.w.requires_grad);

  set_trainable(m, "backbone", false);
  set_trainable(m, "mixture", true);
  CHECK_FALSE(m.conv1.kernel.requires_grad);
  CHECK(m.act3.w.requires_grad);
}

TEST_CASE("forward pass produces logits of the right shape") {
  Model m = build_model(3);
  std::mt19937_64 rng(100);
  const Tensor batch = random_batch(rng, 2, 28);

  Tape t;
  const NodeId logits = model_forward(t, m, t.constant(batch));
  CHECK(t.value(logits).shape == std::vector<std::size_t>{2, 10});
  CHECK(t.value(logits).all_finite());

  const Tensor direct = eval_logits(m, batch);
  CHECK(std::memcmp(direct.data.data(), t.value(logits).data.data(),
                    direct.data.size() * sizeof(double)) == 0);

  Tensor bad({2, 1, 27, 28});
  CHECK_THROWS_AS(model_forward(t, m, t.constant(bad)), ShapeError);
}

TEST_CASE("the reduced architecture stays consistent") {
  const ModelDims d = ModelDims::reduced();
  CHECK(d.image % 4 == 0);
  CHECK(d.flat() == d.conv2_channels * (d.image / 4) * (d.image / 4));

  Model m = build_model(42, d);
  std::mt19937_64 rng(4);
  const Tensor batch = random_batch(rng, 3, d.image);
  const Tensor logits = eval_logits(m, batch);
  CHECK(logits.shape == std::vector<std::size_t>{3, 10});

  ModelDims odd;
  odd.image = 30;  // not divisible by 4: pooling twice would not work
  CHECK_THROWS_AS(build_model(1, odd), ConfigError);
}

TEST_CASE("an almost-pure relu mixture matches the plain relu network") {
  Model m = build_model(123);
  for (MixtureWeights* act : {&m.act1, &m.act2, &m.act3})
    act->w.data = {1.0, 1e-6, 1e-6};

  ref::ReluNetView net{
      m.dims.conv1_channels, m.dims.conv2_channels, m.dims.hidden,
      m.dims.classes,        m.dims.image,          m.dims.ksize,
      m.dims.pad,            m.conv1.kernel.data.data(), m.conv1.bias.data.data(),
      m.conv2.kernel.data.data(), m.conv2.bias.data.data(),
      m.fc1.weight.data.data(),   m.fc1.bias.data.data(),
      m.fc2.weight.data.data(),   m.fc2.bias.data.data()};

  std::mt19937_64 rng(9);
  for (int it = 0; it < 3; ++it) {
    const std::size_t batch = 4;
    const Tensor images = random_batch(rng, batch, m.dims.image);
    const Tensor got = eval_logits(m, images);
    std::vector<double> want(batch * m.dims.classes);
    ref::relu_net_forward(net, images.data.data(), batch, want.data());
    double diff = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i)
      diff = std::max(diff, std::fabs(got.data[i] - want[i]));
    CHECK(diff <= 1e-5);
  }
}

TEST_CASE("margin probing accepts trivial margins and rejects impossible ones") {
  Model m = build_model(42, ModelDims::reduced());
  std::mt19937_64 rng(11);
  const Tensor batch = random_batch(rng, 4, m.dims.image);
  CHECK(perturbation_margins_ok(m, batch, 0.0, 0.0));
  CHECK_FALSE(perturbation_margins_ok(m, batch, 100.0, 100.0));
}
