#pragma once

#include <cstddef>

#include "mixact/kernels.hpp"  // Conv2dShape only

// Serial reference implementations: straight textbook loops, no OpenMP, and a
// deliberately different formulation for the backward passes (scatter instead
// of gather). Tests treat these as independent oracles for the parallel
// kernels; bench_kernels compares their speed. The core engine never calls
// into this namespace.
namespace mixact::ref {

// out[m,n] = a[m,k] @ b[k,n], naive triple loop
void matmul(const double* a, const double* b, double* out,
            std::size_t m, std::size_t k, std::size_t n);

// direct definition with explicit zero padding
void conv2d_forward(const double* in, const double* ker, const double* bias,
                    double* out, const Conv2dShape& s);

// textbook scatter backward; din/dk/db are overwritten (zeroed first)
void conv2d_backward(const double* g, const double* in, const double* ker,
                     double* din, double* dk, double* db, const Conv2dShape& s);

// 2x2 stride-2 max pool, first maximum in row-major window order wins ties
void maxpool2(const double* in, double* out,
              std::size_t n, std::size_t c, std::size_t h, std::size_t w);

// mean softmax cross-entropy via the direct formula, long double accumulation
double softmax_ce(const double* logits, const int* labels,
                  std::size_t n, std::size_t k);

// dlogits[i,j] = (softmax(z)[i,j] - [j == labels[i]]) / n, direct formula
void softmax_ce_grad(const double* logits, const int* labels,
                     std::size_t n, std::size_t k, double* dlogits);

// Textbook scalar Adam, one parameter.
struct AdamScalar {
  double m = 0.0, v = 0.0;
  int t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double step(double theta, double grad, double lr);
};

// Fixed-architecture forward pass of the conv-pool-dense network with plain
// ReLU everywhere, built only from the serial pieces above:
//   conv(k x k, stride 1, pad) -> relu -> pool2
//   -> conv -> relu -> pool2 -> flatten -> dense -> relu -> dense
struct ReluNetView {
  std::size_t c1, c2, hidden, classes;  // channel / width counts
  std::size_t image, k, pad;            // square input side, kernel side, padding
  const double* conv1_kernel;           // [c1, 1, k, k]
  const double* conv1_bias;             // [c1]
  const double* conv2_kernel;           // [c2, c1, k, k]
  const double* conv2_bias;             // [c2]
  const double* fc1_weight;             // [c2*(image/4)^2, hidden]
  const double* fc1_bias;               // [hidden]
  const double* fc2_weight;             // [hidden, classes]
  const double* fc2_bias;               // [classes]
};

void relu_net_forward(const ReluNetView& net, const double* images,
                      std::size_t batch, double* logits);

}  // namespace mixact::ref
