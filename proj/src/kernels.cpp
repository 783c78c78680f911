#include "mixact/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "mixact/errors.hpp"

// Determinism contract: each output element is computed in full by one thread
// with its reduction in a fixed index order, so the floating-point result is
// independent of the thread count. No atomics, no reductions across threads.

namespace mixact {

Conv2dShape conv2d_shape(std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                         std::size_t f, std::size_t kh, std::size_t kw,
                         std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ConfigError("conv2d: stride must be >= 1");
  if (kh == 0 || kw == 0) throw ConfigError("conv2d: kernel dims must be >= 1");
  const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
  if (kh > ph || kw > pw)
    throw ConfigError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                      " larger than padded input " + std::to_string(ph) + "x" + std::to_string(pw));
  if ((ph - kh) % stride != 0 || (pw - kw) % stride != 0)
    throw ConfigError("conv2d: non-integer output size for input " + std::to_string(h) + "x" +
                      std::to_string(w) + ", kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                      ", stride " + std::to_string(stride) + ", pad " + std::to_string(pad));
  Conv2dShape s{n, c, h, w, f, kh, kw, stride, pad, 0, 0};
  s.oh = (ph - kh) / stride + 1;
  s.ow = (pw - kw) / stride + 1;
  return s;
}

namespace kernels {

void matmul(const double* a, const double* b, double* out,
            std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
      out[i * n + j] = acc;
    }
  }
}

void matmul_grad_a_acc(const double* g, const double* b, double* da,
                       std::size_t m, std::size_t k, std::size_t n) {
  // da[i,l] += dot(g[i,:], b[l,:]) — both rows contiguous.
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * b[l * n + j];
      da[i * k + l] += acc;
    }
  }
}

void matmul_grad_b_acc(const double* a, const double* g, double* db,
                       std::size_t m, std::size_t k, std::size_t n) {
  // db[l,j] += sum_i a[i,l] * g[i,j] — gather over rows i.
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += a[i * k + l] * g[i * n + j];
      db[l * n + j] += acc;
    }
  }
}

void conv2d_forward(const double* in, const double* ker, const double* bias,
                    double* out, const Conv2dShape& s) {
  const std::int64_t H = (std::int64_t)s.h, W = (std::int64_t)s.w;
#pragma omp parallel for schedule(static)
  for (std::size_t nf = 0; nf < s.n * s.f; ++nf) {
    const std::size_t nn = nf / s.f, f = nf % s.f;
    const double* kf = ker + f * s.c * s.kh * s.kw;
    double* of = out + nf * s.oh * s.ow;
    for (std::size_t oh = 0; oh < s.oh; ++oh) {
      for (std::size_t ow = 0; ow < s.ow; ++ow) {
        double acc = bias ? bias[f] : 0.0;
        const std::int64_t ih0 = (std::int64_t)(oh * s.stride) - (std::int64_t)s.pad;
        const std::int64_t iw0 = (std::int64_t)(ow * s.stride) - (std::int64_t)s.pad;
        for (std::size_t c = 0; c < s.c; ++c) {
          const double* ic = in + (nn * s.c + c) * s.h * s.w;
          const double* kc = kf + c * s.kh * s.kw;
          for (std::size_t kh = 0; kh < s.kh; ++kh) {
            const std::int64_t ih = ih0 + (std::int64_t)kh;
            if (ih < 0 || ih >= H) continue;
            for (std::size_t kw = 0; kw < s.kw; ++kw) {
              const std::int64_t iw = iw0 + (std::int64_t)kw;
              if (iw < 0 || iw >= W) continue;
              acc += ic[ih * W + iw] * kc[kh * s.kw + kw];
            }
          }
        }
        of[oh * s.ow + ow] = acc;
      }
    }
  }
}

void conv2d_grad_input_acc(const double* g, const double* ker, double* din,
                           const Conv2dShape& s) {
  // din[n,c,ih,iw] += sum over the kernel positions that touched it.
  const std::int64_t OH = (std::int64_t)s.oh, OW = (std::int64_t)s.ow;
  const std::int64_t S = (std::int64_t)s.stride;
#pragma omp parallel for schedule(static)
  for (std::size_t nc = 0; nc < s.n * s.c; ++nc) {
    const std::size_t nn = nc / s.c, c = nc % s.c;
    double* dc = din + nc * s.h * s.w;
    for (std::size_t ih = 0; ih < s.h; ++ih) {
      for (std::size_t iw = 0; iw < s.w; ++iw) {
        double acc = 0.0;
        for (std::size_t f = 0; f < s.f; ++f) {
          const double* gf = g + (nn * s.f + f) * s.oh * s.ow;
          const double* kc = ker + (f * s.c + c) * s.kh * s.kw;
          for (std::size_t kh = 0; kh < s.kh; ++kh) {
            const std::int64_t t = (std::int64_t)ih + (std::int64_t)s.pad - (std::int64_t)kh;
            if (t < 0 || t % S != 0) continue;
            const std::int64_t oh = t / S;
            if (oh >= OH) continue;
            for (std::size_t kw = 0; kw < s.kw; ++kw) {
              const std::int64_t u = (std::int64_t)iw + (std::int64_t)s.pad - (std::int64_t)kw;
              if (u < 0 || u % S != 0) continue;
              const std::int64_t ow = u / S;
              if (ow >= OW) continue;
              acc += gf[oh * OW + ow] * kc[kh * s.kw + kw];
            }
          }
        }
        dc[ih * s.w + iw] += acc;
      }
    }
  }
}

void conv2d_grad_kernel_acc(const double* g, const double* in, double* dk,
                            const Conv2dShape& s) {
  const std::int64_t H = (std::int64_t)s.h, W = (std::int64_t)s.w;
#pragma omp parallel for schedule(static)
  for (std::size_t idx = 0; idx < s.f * s.c * s.kh * s.kw; ++idx) {
    std::size_t rest = idx;
    const std::size_t kw = rest % s.kw; rest /= s.kw;
    const std::size_t kh = rest % s.kh; rest /= s.kh;
    const std::size_t c = rest % s.c;
    const std::size_t f = rest / s.c;
    double acc = 0.0;
    for (std::size_t nn = 0; nn < s.n; ++nn) {
      const double* gf = g + (nn * s.f + f) * s.oh * s.ow;
      const double* ic = in + (nn * s.c + c) * s.h * s.w;
      for (std::size_t oh = 0; oh < s.oh; ++oh) {
        const std::int64_t ih = (std::int64_t)(oh * s.stride + kh) - (std::int64_t)s.pad;
        if (ih < 0 || ih >= H) continue;
        for (std::size_t ow = 0; ow < s.ow; ++ow) {
          const std::int64_t iw = (std::int64_t)(ow * s.stride + kw) - (std::int64_t)s.pad;
          if (iw < 0 || iw >= W) continue;
          acc += gf[oh * s.ow + ow] * ic[ih * W + iw];
        }
      }
    }
    dk[idx] += acc;
  }
}

void conv2d_grad_bias_acc(const double* g, double* db, const Conv2dShape& s) {
#pragma omp parallel for schedule(static)
  for (std::size_t f = 0; f < s.f; ++f) {
    double acc = 0.0;
    for (std::size_t nn = 0; nn < s.n; ++nn) {
      const double* gf = g + (nn * s.f + f) * s.oh * s.ow;
      for (std::size_t i = 0; i < s.oh * s.ow; ++i) acc += gf[i];
    }
    db[f] += acc;
  }
}

void maxpool2_forward(const double* in, double* out, std::size_t* argmax,
                      std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  const std::size_t oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    const double* plane = in + nc * h * w;
    const std::size_t plane_base = nc * h * w;
    double* op = out + nc * oh * ow;
    std::size_t* ap = argmax + nc * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (2 * i) * w + (2 * j);
        double bv = plane[best];
        // row-major window scan; strict > keeps the first maximum on ties
        const std::size_t cand[3] = {(2 * i) * w + (2 * j + 1),
                                     (2 * i + 1) * w + (2 * j),
                                     (2 * i + 1) * w + (2 * j + 1)};
        for (std::size_t t = 0; t < 3; ++t) {
          if (plane[cand[t]] > bv) { bv = plane[cand[t]]; best = cand[t]; }
        }
        op[i * ow + j] = bv;
        ap[i * ow + j] = plane_base + best;
      }
    }
  }
}

void maxpool2_backward_acc(const double* g, const std::size_t* argmax,
                           double* din, std::size_t out_count) {
  // 2x2 stride-2 windows are disjoint, so argmax targets never collide.
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < out_count; ++i) din[argmax[i]] += g[i];
}

void relu_forward(const double* x, double* y, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_acc(const double* x, const double* g, double* dx, std::size_t count) {
  // subgradient at 0 is 0
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i)
    if (x[i] > 0.0) dx[i] += g[i];
}

void tanh_forward(const double* x, double* y, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward_acc(const double* y, const double* g, double* dx, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
}

void sin_forward(const double* x, double* y, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) y[i] = std::sin(x[i]);
}

void sin_backward_acc(const double* x, const double* g, double* dx, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) dx[i] += g[i] * std::cos(x[i]);
}

void add(const double* a, const double* b, double* out, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) out[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) out[i] = a[i] * b[i];
}

void scale(const double* x, double c, double* out, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) out[i] = c * x[i];
}

void acc(const double* src, double* dst, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) dst[i] += src[i];
}

void acc_scaled(const double* src, double c, double* dst, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) dst[i] += c * src[i];
}

void acc_mul(const double* a, const double* b, double* dst, std::size_t count) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) dst[i] += a[i] * b[i];
}

void colsum_acc(const double* g, std::size_t n, std::size_t k, double* db) {
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < k; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += g[i * k + j];
    db[j] += acc;
  }
}

void softmax_ce_forward(const double* logits, const int* labels,
                        std::size_t n, std::size_t k,
                        double* probs, double* loss_out) {
  std::vector<double> row_loss(n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits + i * k;
    double* p = probs + i * k;
    double m = z[0];
    for (std::size_t j = 1; j < k; ++j)
      if (z[j] > m) m = z[j];
    double se = 0.0;
    for (std::size_t j = 0; j < k; ++j) se += std::exp(z[j] - m);
    const double lse = m + std::log(se);
    for (std::size_t j = 0; j < k; ++j) p[j] = std::exp(z[j] - lse);
    row_loss[i] = lse - z[labels[i]];
  }
  double total = 0.0;  // fixed-order final reduction
  for (std::size_t i = 0; i < n; ++i) total += row_loss[i];
  *loss_out = total / (double)n;
}

void softmax_ce_backward_acc(const double* probs, const int* labels,
                             std::size_t n, std::size_t k, double g0,
                             double* dlogits) {
  const double c = g0 / (double)n;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = probs + i * k;
    double* d = dlogits + i * k;
    for (std::size_t j = 0; j < k; ++j)
      d[j] += c * (p[j] - (j == (std::size_t)labels[i] ? 1.0 : 0.0));
  }
}

void adam_update(double* theta, const double* grad, double* m, double* v,
                 std::size_t count, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    theta[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

void clamp_min(double* x, std::size_t count, double floor) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i)
    if (x[i] < floor) x[i] = floor;
}

}  // namespace kernels
}  // namespace mixact
