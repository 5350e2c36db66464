#pragma once

#include "evdet/events.hpp"
#include "evdet/synthetic.hpp"

namespace evdet {

/// Box in normalised image fractions: centre and size.
struct BBox {
  double cx = 0, cy = 0, w = 0, h = 0;

  double x0() const { return cx - w / 2; }
  double y0() const { return cy - h / 2; }
  double x1() const { return cx + w / 2; }
  double y1() const { return cy + h / 2; }
  double area() const { return w * h; }

  static BBox from_corners(double x0, double y0, double x1, double y1);
  /// Pixel corners (top-left, bottom-right) on a sensor of geometry `g`.
  static BBox from_pixel_corners(double x0, double y0, double x1, double y1, const SensorGeometry& g);
  static BBox from_pixel_box(const PixelBox& b, const SensorGeometry& g);
  PixelBox to_pixel_box(const SensorGeometry& g) const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// w > 0, h > 0 and a non-empty overlap with the unit square.
bool is_valid(const BBox& b);

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

}  // namespace evdet
