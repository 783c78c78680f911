#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mixact {

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);  // e.g. "[2,3,4]"

// Dense row-major float64 tensor. `grad` is either empty or exactly
// data.size() long; scalars are shape {1}.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);                         // zero-filled
  Tensor(std::vector<std::size_t> s, std::vector<double> d);           // takes ownership
  static Tensor scalar(double v);
  static Tensor full(std::vector<std::size_t> s, double v);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  void ensure_grad();  // allocate zero grad if absent
  void zero_grad();    // allocate if needed, then clear to zero
  bool all_finite() const;
};

}  // namespace mixact
