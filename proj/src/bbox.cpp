#include "evdet/bbox.hpp"

#include <algorithm>

namespace evdet {

BBox BBox::from_corners(double x0, double y0, double x1, double y1) {
  return {(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0};
}

BBox BBox::from_pixel_corners(double x0, double y0, double x1, double y1, const SensorGeometry& g) {
  const double w = g.width, h = g.height;
  return from_corners(x0 / w, y0 / h, x1 / w, y1 / h);
}

BBox BBox::from_pixel_box(const PixelBox& b, const SensorGeometry& g) {
  return from_pixel_corners(b.x, b.y, b.x + b.w, b.y + b.h, g);
}

PixelBox BBox::to_pixel_box(const SensorGeometry& g) const {
  return {x0() * g.width, y0() * g.height, w * g.width, h * g.height};
}

bool is_valid(const BBox& b) {
  if (!(b.w > 0) || !(b.h > 0)) return false;
  return std::min(b.x1(), 1.0) > std::max(b.x0(), 0.0) && std::min(b.y1(), 1.0) > std::max(b.y0(), 0.0);
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0 || ih <= 0) return 0.0;
  // Areas from the same corner differences as the overlap, so identical
  // boxes give exactly 1.
  const double area_a = (a.x1() - a.x0()) * (a.y1() - a.y0());
  const double area_b = (b.x1() - b.x0()) * (b.y1() - b.y0());
  const double inter = iw * ih;
  const double uni = area_a + area_b - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

}  // namespace evdet
