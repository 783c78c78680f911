// Times the OpenMP kernels against the serial reference loops on model-sized
// problems and reports speedups. Also prints the max element difference per
// pair as a sanity check (expected ~1e-15 scale). Not part of the test suite.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mixact/kernels.hpp"
#include "mixact/reference.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_per_run(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void fill(std::vector<double>& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& x : v) x = dist(rng);
}

void report(const char* name, double serial, double parallel, double diff) {
  std::printf("%-22s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   max|diff| %.2e\n",
              name, serial * 1e3, parallel * 1e3, serial / parallel, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without openmp; comparing identical serial paths\n");
#endif
  std::mt19937_64 rng(7);

  {
    // fc1-sized matmul: [256,784] x [784,128]
    const std::size_t m = 256, k = 784, n = 128;
    std::vector<double> a(m * k), b(k * n), out_ref(m * n), out_par(m * n);
    fill(a, rng);
    fill(b, rng);
    const double ts = seconds_per_run(
        [&] { mixact::ref::matmul(a.data(), b.data(), out_ref.data(), m, k, n); }, 5);
    const double tp = seconds_per_run(
        [&] { mixact::kernels::matmul(a.data(), b.data(), out_par.data(), m, k, n); }, 5);
    report("matmul 256x784x128", ts, tp, max_diff(out_ref, out_par));
  }

  {
    // conv2-sized convolution: batch 64, 8->16 channels, 14x14
    const auto s = mixact::conv2d_shape(64, 8, 14, 14, 16, 3, 3, 1, 1);
    std::vector<double> in(s.n * s.c * s.h * s.w), ker(s.f * s.c * s.kh * s.kw),
        bias(s.f), out_ref(s.n * s.f * s.oh * s.ow), out_par(out_ref.size());
    fill(in, rng);
    fill(ker, rng);
    fill(bias, rng);
    const double ts = seconds_per_run(
        [&] {
          mixact::ref::conv2d_forward(in.data(), ker.data(), bias.data(),
                                      out_ref.data(), s);
        },
        5);
    const double tp = seconds_per_run(
        [&] {
          mixact::kernels::conv2d_forward(in.data(), ker.data(), bias.data(),
                                          out_par.data(), s);
        },
        5);
    report("conv2d 64x8->16 14x14", ts, tp, max_diff(out_ref, out_par));
  }

  {
    // conv1-sized convolution: batch 64, 1->8 channels, 28x28
    const auto s = mixact::conv2d_shape(64, 1, 28, 28, 8, 3, 3, 1, 1);
    std::vector<double> in(s.n * s.c * s.h * s.w), ker(s.f * s.c * s.kh * s.kw),
        bias(s.f), out_ref(s.n * s.f * s.oh * s.ow), out_par(out_ref.size());
    fill(in, rng);
    fill(ker, rng);
    fill(bias, rng);
    const double ts = seconds_per_run(
        [&] {
          mixact::ref::conv2d_forward(in.data(), ker.data(), bias.data(),
                                      out_ref.data(), s);
        },
        5);
    const double tp = seconds_per_run(
        [&] {
          mixact::kernels::conv2d_forward(in.data(), ker.data(), bias.data(),
                                          out_par.data(), s);
        },
        5);
    report("conv2d 64x1->8 28x28", ts, tp, max_diff(out_ref, out_par));
  }

  {
    // pool over conv1-sized activation
    const std::size_t n = 64, c = 8, h = 28, w = 28;
    std::vector<double> in(n * c * h * w), out_ref(n * c * (h / 2) * (w / 2)),
        out_par(out_ref.size());
    std::vector<std::size_t> argmax(out_ref.size());
    fill(in, rng);
    const double ts = seconds_per_run(
        [&] { mixact::ref::maxpool2(in.data(), out_ref.data(), n, c, h, w); }, 20);
    const double tp = seconds_per_run(
        [&] {
          mixact::kernels::maxpool2_forward(in.data(), out_par.data(),
                                            argmax.data(), n, c, h, w);
        },
        20);
    report("maxpool2 64x8 28x28", ts, tp, max_diff(out_ref, out_par));
  }

  {
    // classifier head loss: [256, 10]
    const std::size_t n = 256, k = 10;
    std::vector<double> logits(n * k), probs(n * k);
    std::vector<int> labels(n);
    fill(logits, rng);
    std::uniform_int_distribution<int> label(0, 9);
    for (int& v : labels) v = label(rng);
    double loss_ref = 0.0, loss_par = 0.0;
    const double ts = seconds_per_run(
        [&] { loss_ref = mixact::ref::softmax_ce(logits.data(), labels.data(), n, k); },
        50);
    const double tp = seconds_per_run(
        [&] {
          mixact::kernels::softmax_ce_forward(logits.data(), labels.data(), n, k,
                                              probs.data(), &loss_par);
        },
        50);
    report("softmax-ce 256x10", ts, tp, std::abs(loss_ref - loss_par));
  }

  return 0;
}
