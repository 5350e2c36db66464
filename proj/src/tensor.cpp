#include "evdet/tensor.hpp"

#include "evdet/error.hpp"

namespace evdet {

Tensor Tensor::from_planar(Shape shape, std::span<const double> planar) {
  if (planar.size() != shape.size()) throw ShapeError("planar buffer size does not match tensor shape");
  Tensor t(shape);
  const std::size_t plane = shape.sites();
  for (int c = 0; c < shape.c; ++c) {
    for (std::size_t i = 0; i < plane; ++i) t.data_[i * shape.c + c] = static_cast<float>(planar[c * plane + i]);
  }
  return t;
}

std::vector<double> Tensor::to_planar() const {
  std::vector<double> out(shape_.size());
  const std::size_t plane = shape_.sites();
  for (int c = 0; c < shape_.c; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = data_[i * shape_.c + c];
  }
  return out;
}

}  // namespace evdet
