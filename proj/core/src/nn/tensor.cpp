#include "dualpath/nn/tensor.hpp"

#include <functional>
#include <numeric>

#include "dualpath/errors.hpp"

namespace dualpath::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_size(shape)) {
    fail(ErrorKind::kDimension, "tensor data does not fill shape " + shape_string(shape));
  }
}

double Tensor::item() const {
  if (data.size() != 1) fail(ErrorKind::kDimension, "item() on a non-scalar tensor");
  return data[0];
}

Tensor planar_tensor(std::span<const Complex> x) {
  return Tensor({2, x.size()}, to_planar(x));
}

ComplexSequence complex_from(const Tensor& planar) {
  if (planar.rank() != 2 || planar.dim(0) != 2) fail(ErrorKind::kDimension, "complex tensor must be 2xN");
  return from_planar(planar.data);
}

}  // namespace dualpath::nn
