#pragma once

#include <functional>
#include <span>

#include "mixact/tape.hpp"

namespace mixact {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t elements = 0;  // parameter elements checked
};

// Compares tape gradients of a scalar-valued build function against central
// finite differences, perturbing every element of every listed parameter.
// `build` must construct the graph on the given tape from the parameters'
// current values (via tape.param) and return the scalar loss node. Relative
// error per element is |a - n| / max(|a|, |n|, 1e-8); the maximum over all
// elements is reported, never thrown.
GradCheckResult gradcheck(const std::function<NodeId(Tape&)>& build,
                          std::span<Tensor* const> params, double h);

}  // namespace mixact
