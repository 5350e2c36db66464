#include "evdet/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "evdet/error.hpp"
#include "evdet/io_util.hpp"

namespace evdet {
namespace {

struct MovingRect {
  double x0, y0;  // top-left at t = 0
  double vx, vy;  // px/s
  int w, h;
};

// Position on [0, limit] under specular reflection at both ends.
double bounce(double p, double limit) {
  if (limit <= 0.0) return 0.0;
  const double period = 2.0 * limit;
  double m = std::fmod(p, period);
  if (m < 0) m += period;
  return m <= limit ? m : period - m;
}

std::vector<MovingRect> spawn(const SceneConfig& cfg) {
  validate_geometry(cfg.geometry);
  if (cfg.rect_count < 0) throw Error("rectangle count must be >= 0");
  if (cfg.min_width < 1 || cfg.min_height < 1 || cfg.max_width < cfg.min_width ||
      cfg.max_height < cfg.min_height || cfg.min_speed < 0 || cfg.max_speed < cfg.min_speed) {
    throw Error("invalid rectangle size or speed range");
  }
  if (cfg.max_width > cfg.geometry.width || cfg.max_height > cfg.geometry.height) {
    throw Error("degenerate geometry: rectangles do not fit the sensor");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto lerp = [&](double a, double b) { return a + (b - a) * unit(rng); };

  std::vector<MovingRect> rects;
  for (int i = 0; i < cfg.rect_count; ++i) {
    MovingRect r{};
    r.w = static_cast<int>(std::lround(lerp(cfg.min_width, cfg.max_width)));
    r.h = static_cast<int>(std::lround(lerp(cfg.min_height, cfg.max_height)));
    r.x0 = lerp(0.0, cfg.geometry.width - r.w);
    r.y0 = lerp(0.0, cfg.geometry.height - r.h);
    const double speed = lerp(cfg.min_speed, cfg.max_speed);
    const double heading = lerp(0.0, 2.0 * std::numbers::pi);
    r.vx = speed * std::cos(heading);
    r.vy = speed * std::sin(heading);
    rects.push_back(r);
  }
  return rects;
}

// Integer pixel footprint of a rectangle at time t.
PixelBox footprint(const MovingRect& r, const SensorGeometry& g, std::uint64_t t_us) {
  const double s = static_cast<double>(t_us) * 1e-6;
  const double x = bounce(r.x0 + r.vx * s, static_cast<double>(g.width) - r.w);
  const double y = bounce(r.y0 + r.vy * s, static_cast<double>(g.height) - r.h);
  return {std::floor(x + 0.5), std::floor(y + 0.5), static_cast<double>(r.w), static_cast<double>(r.h)};
}

LuminanceFrame render(const SceneConfig& cfg, const std::vector<MovingRect>& rects, std::uint64_t t_us) {
  LuminanceFrame f;
  f.t_us = t_us;
  f.width = cfg.geometry.width;
  f.height = cfg.geometry.height;
  f.luminance.assign(cfg.geometry.pixels(), cfg.background);
  for (const auto& r : rects) {
    const PixelBox b = footprint(r, cfg.geometry, t_us);
    const auto x0 = static_cast<std::uint32_t>(b.x), y0 = static_cast<std::uint32_t>(b.y);
    const auto x1 = std::min<std::uint32_t>(f.width, x0 + static_cast<std::uint32_t>(b.w));
    const auto y1 = std::min<std::uint32_t>(f.height, y0 + static_cast<std::uint32_t>(b.h));
    for (std::uint32_t y = y0; y < y1; ++y) {
      for (std::uint32_t x = x0; x < x1; ++x) f.luminance[std::size_t{y} * f.width + x] = cfg.foreground;
    }
  }
  return f;
}

}  // namespace

LuminanceFrame render_scene_frame(const SceneConfig& cfg, std::uint64_t t_us) {
  return render(cfg, spawn(cfg), t_us);
}

SyntheticScene gen_synthetic_scene(const SceneConfig& cfg) {
  if (cfg.window_us < 1 || cfg.frame_interval_us < 1) throw Error("window and frame interval must be >= 1 us");
  const auto rects = spawn(cfg);

  SyntheticScene scene;
  scene.stream.geometry = cfg.geometry;
  DvsSimulator sim(cfg.dvs);
  for (std::uint64_t t = 0; t < cfg.duration_us; t += cfg.frame_interval_us) {
    auto ev = sim.step(render(cfg, rects, t));
    scene.stream.events.insert(scene.stream.events.end(), ev.begin(), ev.end());
  }

  for (std::uint64_t start = 0; start < cfg.duration_us; start += cfg.window_us) {
    for (const auto& r : rects) {
      scene.ground_truth.push_back({start, footprint(r, cfg.geometry, start + cfg.window_us), 0});
    }
  }
  return scene;
}

std::string write_ground_truth_csv(const std::vector<GtAnnotation>& gt) {
  std::string out = "window_start_us,x,y,w,h,class_id\n";
  auto num = [](double v) {
    // Integral pixel values print without a fraction.
    if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
    return io::fixed(v, 6);
  };
  for (const auto& a : gt) {
    out += std::to_string(a.window_start_us) + ',' + num(a.box.x) + ',' + num(a.box.y) + ',' + num(a.box.w) +
           ',' + num(a.box.h) + ',' + std::to_string(a.class_id) + '\n';
  }
  return out;
}

}  // namespace evdet
