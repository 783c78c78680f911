#pragma once

#include <cstddef>
#include <vector>

namespace mixact {

// Validated conv2d geometry. Output size must come out integral.
struct Conv2dShape {
  std::size_t n, c, h, w;   // input  [n, c, h, w]
  std::size_t f, kh, kw;    // kernel [f, c, kh, kw]
  std::size_t stride, pad;
  std::size_t oh, ow;       // output [n, f, oh, ow]
};

Conv2dShape conv2d_shape(std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                         std::size_t f, std::size_t kh, std::size_t kw,
                         std::size_t stride, std::size_t pad);

// Parallel kernels. Every loop is gather-form: each output element is owned by
// exactly one thread and its inner reduction runs in a fixed order, so results
// are bit-identical for any thread count. Functions ending in _acc accumulate
// (dst += ...) because tape gradients add across fan-out.
namespace kernels {

// out[m,n] = a[m,k] @ b[k,n]
void matmul(const double* a, const double* b, double* out,
            std::size_t m, std::size_t k, std::size_t n);
// da[m,k] += g[m,n] @ b[k,n]^T
void matmul_grad_a_acc(const double* g, const double* b, double* da,
                       std::size_t m, std::size_t k, std::size_t n);
// db[k,n] += a[m,k]^T @ g[m,n]
void matmul_grad_b_acc(const double* a, const double* g, double* db,
                       std::size_t m, std::size_t k, std::size_t n);

void conv2d_forward(const double* in, const double* ker, const double* bias,
                    double* out, const Conv2dShape& s);
void conv2d_grad_input_acc(const double* g, const double* ker, double* din,
                           const Conv2dShape& s);
void conv2d_grad_kernel_acc(const double* g, const double* in, double* dk,
                            const Conv2dShape& s);
void conv2d_grad_bias_acc(const double* g, double* db, const Conv2dShape& s);

// 2x2 stride-2 max pool; argmax holds the flat input index per output element
// (first maximum in row-major window order wins ties).
void maxpool2_forward(const double* in, double* out, std::size_t* argmax,
                      std::size_t n, std::size_t c, std::size_t h, std::size_t w);
void maxpool2_backward_acc(const double* g, const std::size_t* argmax,
                           double* din, std::size_t out_count);

void relu_forward(const double* x, double* y, std::size_t count);
void relu_backward_acc(const double* x, const double* g, double* dx, std::size_t count);
void tanh_forward(const double* x, double* y, std::size_t count);
void tanh_backward_acc(const double* y, const double* g, double* dx, std::size_t count);
void sin_forward(const double* x, double* y, std::size_t count);
void sin_backward_acc(const double* x, const double* g, double* dx, std::size_t count);

void add(const double* a, const double* b, double* out, std::size_t count);
void mul(const double* a, const double* b, double* out, std::size_t count);
void scale(const double* x, double c, double* out, std::size_t count);
void acc(const double* src, double* dst, std::size_t count);                  // dst += src
void acc_scaled(const double* src, double c, double* dst, std::size_t count); // dst += c*src
void acc_mul(const double* a, const double* b, double* dst, std::size_t count); // dst += a*b

// db[j] += sum over rows of g[n,k]
void colsum_acc(const double* g, std::size_t n, std::size_t k, double* db);

// Mean cross-entropy over rows of logits[n,k]; probs receives the softmax
// rows (stabilized by per-row max subtraction) for reuse in the backward pass.
void softmax_ce_forward(const double* logits, const int* labels,
                        std::size_t n, std::size_t k,
                        double* probs, double* loss_out);
// dlogits[i,j] += g0 * (probs[i,j] - [j == labels[i]]) / n
void softmax_ce_backward_acc(const double* probs, const int* labels,
                             std::size_t n, std::size_t k, double g0,
                             double* dlogits);

// One Adam update with precomputed bias corrections bc1 = 1-b1^t, bc2 = 1-b2^t.
void adam_update(double* theta, const double* grad, double* m, double* v,
                 std::size_t count, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2);

void clamp_min(double* x, std::size_t count, double floor);

}  // namespace kernels
}  // namespace mixact
