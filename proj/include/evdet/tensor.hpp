#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace evdet {

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t sites() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return sites() * c; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Spatial location (row, column). Ordering is raster order.
struct Site {
  int y = 0;
  int x = 0;
  friend auto operator<=>(const Site&, const Site&) = default;
};

/// Dense float32 activation tensor stored site-major (H x W x C): the
/// channel vector of one site is contiguous.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f) : shape_(shape), data_(shape.size(), fill) {}

  /// From a channel-planar (C x H x W) buffer.
  static Tensor from_planar(Shape shape, std::span<const double> planar);
  std::vector<double> to_planar() const;

  const Shape& shape() const { return shape_; }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  float* site(int y, int x) { return data_.data() + (static_cast<std::size_t>(y) * shape_.w + x) * shape_.c; }
  const float* site(int y, int x) const {
    return data_.data() + (static_cast<std::size_t>(y) * shape_.w + x) * shape_.c;
  }
  float& at(int c, int y, int x) { return site(y, x)[c]; }
  float at(int c, int y, int x) const { return site(y, x)[c]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace evdet
