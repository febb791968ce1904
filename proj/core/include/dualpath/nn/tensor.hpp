#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dualpath/sigcore.hpp"

namespace dualpath::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  double item() const;

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

// Complex sequence as a 2xN tensor (I row, Q row).
Tensor planar_tensor(std::span<const Complex> x);
ComplexSequence complex_from(const Tensor& planar);

}  // namespace dualpath::nn
