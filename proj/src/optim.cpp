#include "mixact/optim.hpp"

#include <cmath>

#include "mixact/errors.hpp"
#include "mixact/kernels.hpp"

namespace mixact {

Adam::Adam(const std::vector<ParamRef>& params, AdamConfig cfg) : cfg_(cfg) {
  for (const ParamRef& p : params) {
    order_.push_back(p.name);
    slots_.push_back(Slot{std::vector<double>(p.tensor->size(), 0.0),
                          std::vector<double>(p.tensor->size(), 0.0)});
  }
}

Adam::Slot& Adam::slot(const std::string& name) {
  for (std::size_t i = 0; i < order_.size(); ++i)
    if (order_[i] == name) return slots_[i];
  throw Error("optimizer has no state for parameter '" + name + "'");
}

const std::vector<double>& Adam::moment1(const std::string& name) const {
  return const_cast<Adam*>(this)->slot(name).m;
}

const std::vector<double>& Adam::moment2(const std::string& name) const {
  return const_cast<Adam*>(this)->slot(name).v;
}

void Adam::load_moments(const std::string& name, std::vector<double> m,
                        std::vector<double> v) {
  Slot& s = slot(name);
  if (m.size() != s.m.size() || v.size() != s.v.size())
    throw Error("moment size mismatch for parameter '" + name + "'");
  s.m = std::move(m);
  s.v = std::move(v);
}

void Adam::step(const std::vector<ParamRef>& params, double lr) {
  if (!(lr > 0.0)) throw ConfigError("adam: learning rate must be > 0");
  t_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, (double)t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, (double)t_);
  for (const ParamRef& p : params) {
    if (!p.tensor->requires_grad) continue;  // frozen: no update, no moment decay
    if (p.tensor->grad.size() != p.tensor->size())
      throw Error("adam: parameter '" + p.name + "' has no gradient");
    Slot& s = slot(p.name);
    kernels::adam_update(p.tensor->data.data(), p.tensor->grad.data(), s.m.data(),
                         s.v.data(), p.tensor->size(), lr, cfg_.beta1, cfg_.beta2,
                         cfg_.eps, bc1, bc2);
    if (p.nonneg_floor)
      kernels::clamp_min(p.tensor->data.data(), p.tensor->size(), kWeightFloor);
  }
}

void project_nonneg(MixtureWeights& mw) {
  kernels::clamp_min(mw.w.data.data(), mw.w.size(), kWeightFloor);
}

}  // namespace mixact
