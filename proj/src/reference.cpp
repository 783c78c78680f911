#include "mixact/reference.hpp"

#include <cmath>
#include <cstring>
#include <vector>

namespace mixact::ref {

void matmul(const double* a, const double* b, double* out,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
      out[i * n + j] = acc;
    }
}

void conv2d_forward(const double* in, const double* ker, const double* bias,
                    double* out, const Conv2dShape& s) {
  for (std::size_t nn = 0; nn < s.n; ++nn)
    for (std::size_t f = 0; f < s.f; ++f)
      for (std::size_t oh = 0; oh < s.oh; ++oh)
        for (std::size_t ow = 0; ow < s.ow; ++ow) {
          double acc = bias ? bias[f] : 0.0;
          for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t kh = 0; kh < s.kh; ++kh)
              for (std::size_t kw = 0; kw < s.kw; ++kw) {
                const long ih = (long)(oh * s.stride + kh) - (long)s.pad;
                const long iw = (long)(ow * s.stride + kw) - (long)s.pad;
                if (ih < 0 || ih >= (long)s.h || iw < 0 || iw >= (long)s.w) continue;
                acc += in[((nn * s.c + c) * s.h + ih) * s.w + iw] *
                       ker[((f * s.c + c) * s.kh + kh) * s.kw + kw];
              }
          out[((nn * s.f + f) * s.oh + oh) * s.ow + ow] = acc;
        }
}

void conv2d_backward(const double* g, const double* in, const double* ker,
                     double* din, double* dk, double* db, const Conv2dShape& s) {
  std::memset(din, 0, sizeof(double) * s.n * s.c * s.h * s.w);
  std::memset(dk, 0, sizeof(double) * s.f * s.c * s.kh * s.kw);
  std::memset(db, 0, sizeof(double) * s.f);
  for (std::size_t nn = 0; nn < s.n; ++nn)
    for (std::size_t f = 0; f < s.f; ++f)
      for (std::size_t oh = 0; oh < s.oh; ++oh)
        for (std::size_t ow = 0; ow < s.ow; ++ow) {
          const double gv = g[((nn * s.f + f) * s.oh + oh) * s.ow + ow];
          db[f] += gv;
          for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t kh = 0; kh < s.kh; ++kh)
              for (std::size_t kw = 0; kw < s.kw; ++kw) {
                const long ih = (long)(oh * s.stride + kh) - (long)s.pad;
                const long iw = (long)(ow * s.stride + kw) - (long)s.pad;
                if (ih < 0 || ih >= (long)s.h || iw < 0 || iw >= (long)s.w) continue;
                const std::size_t ii = ((nn * s.c + c) * s.h + ih) * s.w + iw;
                const std::size_t ki = ((f * s.c + c) * s.kh + kh) * s.kw + kw;
                dk[ki] += gv * in[ii];
                din[ii] += gv * ker[ki];
              }
        }
}

void maxpool2(const double* in, double* out,
              std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  const std::size_t oh = h / 2, ow = w / 2;
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    const double* plane = in + nc * h * w;
    double* op = out + nc * oh * ow;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double bv = plane[(2 * i) * w + 2 * j];
        for (std::size_t di = 0; di < 2; ++di)
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const double v = plane[(2 * i + di) * w + (2 * j + dj)];
            if (v > bv) bv = v;
          }
        op[i * ow + j] = bv;
      }
  }
}

double softmax_ce(const double* logits, const int* labels,
                  std::size_t n, std::size_t k) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits + i * k;
    long double m = z[0];
    for (std::size_t j = 1; j < k; ++j)
      if (z[j] > m) m = z[j];
    long double se = 0.0L;
    for (std::size_t j = 0; j < k; ++j) se += expl((long double)z[j] - m);
    total += m + logl(se) - (long double)z[labels[i]];
  }
  return (double)(total / (long double)n);
}

void softmax_ce_grad(const double* logits, const int* labels,
                     std::size_t n, std::size_t k, double* dlogits) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits + i * k;
    long double m = z[0];
    for (std::size_t j = 1; j < k; ++j)
      if (z[j] > m) m = z[j];
    long double se = 0.0L;
    for (std::size_t j = 0; j < k; ++j) se += expl((long double)z[j] - m);
    for (std::size_t j = 0; j < k; ++j) {
      const long double p = expl((long double)z[j] - m) / se;
      dlogits[i * k + j] =
          (double)((p - (j == (std::size_t)labels[i] ? 1.0L : 0.0L)) / (long double)n);
    }
  }
}

double AdamScalar::step(double theta, double grad, double lr) {
  t += 1;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mh = m / (1.0 - std::pow(beta1, t));
  const double vh = v / (1.0 - std::pow(beta2, t));
  return theta - lr * mh / (std::sqrt(vh) + eps);
}

static void relu_inplace(std::vector<double>& x) {
  for (double& v : x)
    if (v < 0.0) v = 0.0;
}

void relu_net_forward(const ReluNetView& net, const double* images,
                      std::size_t batch, double* logits) {
  const std::size_t img = net.image;
  const std::size_t half = img / 2, quarter = img / 4;
  const std::size_t flat = net.c2 * quarter * quarter;

  Conv2dShape s1 = conv2d_shape(batch, 1, img, img, net.c1, net.k, net.k, 1, net.pad);
  std::vector<double> a1(batch * net.c1 * s1.oh * s1.ow);
  conv2d_forward(images, net.conv1_kernel, net.conv1_bias, a1.data(), s1);
  relu_inplace(a1);
  std::vector<double> p1(batch * net.c1 * half * half);
  maxpool2(a1.data(), p1.data(), batch, net.c1, s1.oh, s1.ow);

  Conv2dShape s2 = conv2d_shape(batch, net.c1, half, half, net.c2, net.k, net.k, 1, net.pad);
  std::vector<double> a2(batch * net.c2 * s2.oh * s2.ow);
  conv2d_forward(p1.data(), net.conv2_kernel, net.conv2_bias, a2.data(), s2);
  relu_inplace(a2);
  std::vector<double> p2(batch * net.c2 * quarter * quarter);
  maxpool2(a2.data(), p2.data(), batch, net.c2, s2.oh, s2.ow);

  std::vector<double> h(batch * net.hidden);
  matmul(p2.data(), net.fc1_weight, h.data(), batch, flat, net.hidden);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < net.hidden; ++j) h[i * net.hidden + j] += net.fc1_bias[j];
  relu_inplace(h);

  matmul(h.data(), net.fc2_weight, logits, batch, net.hidden, net.classes);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < net.classes; ++j) logits[i * net.classes + j] += net.fc2_bias[j];
}

}  // namespace mixact::ref
