#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixact/mixture.hpp"
#include "mixact/tensor.hpp"

namespace mixact {

// Named handle to one parameter tensor. nonneg_floor marks raw mixture
// weights, which get clamped to kWeightFloor after every update.
struct ParamRef {
  std::string name;
  Tensor* tensor;
  bool nonneg_floor = false;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. First and second moments live per parameter and
// persist for the optimizer's lifetime; the step counter t can be reset (the
// training schedule restarts it at each phase boundary). Frozen parameters
// (requires_grad == false) are skipped entirely: no update, no moment decay.
class Adam {
 public:
  explicit Adam(const std::vector<ParamRef>& params, AdamConfig cfg = {});

  // One update over every trainable parameter in `params` (throws if a
  // trainable parameter has no gradient buffer). Applies the nonnegative
  // floor projection to parameters marked nonneg_floor.
  void step(const std::vector<ParamRef>& params, double lr);

  void reset_step_counter() { t_ = 0; }
  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  const AdamConfig& config() const { return cfg_; }
  const std::vector<std::string>& slot_names() const { return order_; }
  const std::vector<double>& moment1(const std::string& name) const;
  const std::vector<double>& moment2(const std::string& name) const;
  void load_moments(const std::string& name, std::vector<double> m, std::vector<double> v);

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  Slot& slot(const std::string& name);

  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<std::string> order_;
  std::vector<Slot> slots_;  // parallel to order_
};

// Clamp raw mixture weights to the training floor, in place.
void project_nonneg(MixtureWeights& mw);

}  // namespace mixact
