#include "mixact/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mixact/errors.hpp"

namespace mixact {

GradCheckResult gradcheck(const std::function<NodeId(Tape&)>& build,
                          std::span<Tensor* const> params, double h) {
  if (h <= 0.0) throw Error("gradcheck: step h must be positive");

  auto eval = [&build]() {
    Tape t;
    const NodeId loss = build(t);
    const Tensor& v = t.value(loss);
    if (v.size() != 1)
      throw Error("gradcheck: build function must return a scalar node");
    return v.data[0];
  };

  // analytic pass: force gradients on, one forward + backward
  std::vector<bool> saved;
  saved.reserve(params.size());
  for (Tensor* p : params) {
    saved.push_back(p->requires_grad);
    p->requires_grad = true;
    p->zero_grad();
  }
  {
    Tape t;
    const NodeId loss = build(t);
    if (t.value(loss).size() != 1)
      throw Error("gradcheck: build function must return a scalar node");
    t.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor* p : params) analytic.push_back(p->grad);

  GradCheckResult out;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor* p = params[pi];
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double v0 = p->data[i];
      p->data[i] = v0 + h;
      const double fp = eval();
      p->data[i] = v0 - h;
      const double fm = eval();
      p->data[i] = v0;
      const double num = (fp - fm) / (2.0 * h);
      const double ana = analytic[pi][i];
      const double rel =
          std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-8});
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.elements;
    }
  }

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    params[pi]->requires_grad = saved[pi];
    params[pi]->zero_grad();
  }
  return out;
}

}  // namespace mixact
