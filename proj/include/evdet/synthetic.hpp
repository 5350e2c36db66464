#pragma once

#include <cstdint>
#include <vector>

#include "evdet/dvs_sim.hpp"
#include "evdet/events.hpp"

namespace evdet {

/// Axis-aligned ground-truth box in pixel units (top-left origin).
struct PixelBox {
  double x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct GtAnnotation {
  std::uint64_t window_start_us = 0;
  PixelBox box;
  int class_id = 0;
  friend bool operator==(const GtAnnotation&, const GtAnnotation&) = default;
};

struct SceneConfig {
  SensorGeometry geometry{256, 144};
  int rect_count = 2;
  double min_width = 6, max_width = 14;    // px
  double min_height = 14, max_height = 30;  // px
  double min_speed = 100, max_speed = 400;  // px/s
  std::uint64_t duration_us = 500'000;
  std::uint64_t window_us = 10'000;
  std::uint64_t frame_interval_us = 1'000;  // 1 kHz rendering
  double background = 0.05;
  double foreground = 0.8;
  std::uint64_t seed = 0;
  DvsSimConfig dvs{};
};

struct SyntheticScene {
  EventStream stream;
  std::vector<GtAnnotation> ground_truth;  // sorted by window start
};

/// Moving bright rectangles over a dark background, rendered at
/// `frame_interval_us` and converted to events through DvsSimulator. One GT
/// box (class 0) per rectangle per window, placed where the rectangle is at
/// the window's end. Rectangles bounce off the sensor borders. Deterministic
/// in `seed`.
SyntheticScene gen_synthetic_scene(const SceneConfig& cfg);

/// Renders the scene luminance at time `t_us` (exposed for tests).
LuminanceFrame render_scene_frame(const SceneConfig& cfg, std::uint64_t t_us);

std::string write_ground_truth_csv(const std::vector<GtAnnotation>& gt);

}  // namespace evdet
