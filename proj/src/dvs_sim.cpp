#include "evdet/dvs_sim.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "evdet/error.hpp"

namespace evdet {
namespace {

// Guards floor(|delta|/C) against a step that lands a hair below an exact
// multiple of C after the log round trip.
constexpr double kCrossingSlack = 1e-9;

void check_frame(const LuminanceFrame& f) {
  if (f.width == 0 || f.height == 0 || f.luminance.size() != std::size_t{f.width} * f.height) {
    throw ShapeError("luminance frame size does not match its dimensions");
  }
  for (double v : f.luminance) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("negative or non-finite luminance");
  }
}

}  // namespace

DvsSimulator::DvsSimulator(DvsSimConfig cfg) : cfg_(cfg) {
  if (!(cfg_.contrast_threshold > 0.0)) throw Error("contrast threshold must be > 0");
  if (!(cfg_.luminance_floor > 0.0)) throw Error("luminance floor must be > 0");
}

std::vector<Event> DvsSimulator::step(const LuminanceFrame& frame) {
  check_frame(frame);
  const std::size_t n = frame.luminance.size();
  std::vector<double> log_now(n);
  for (std::size_t i = 0; i < n; ++i) log_now[i] = std::log(frame.luminance[i] + cfg_.luminance_floor);

  if (!initialized()) {
    validate_geometry({frame.width, frame.height});
    width_ = frame.width;
    height_ = frame.height;
    reference_ = log_now;
    last_log_ = std::move(log_now);
    last_t_ = frame.t_us;
    return {};
  }
  if (frame.width != width_ || frame.height != height_) throw ShapeError("frame size changed mid-stream");
  if (frame.t_us <= last_t_) throw Error("frame timestamps must be strictly increasing");

  const double c = cfg_.contrast_threshold;
  const std::uint64_t dt = frame.t_us - last_t_;
  std::vector<Event> out;
  for (std::uint32_t y = 0; y < height_; ++y) {
    for (std::uint32_t x = 0; x < width_; ++x) {
      const std::size_t i = std::size_t{y} * width_ + x;
      const double delta = log_now[i] - reference_[i];
      const auto k = static_cast<std::uint64_t>(std::floor(std::abs(delta) / c + kCrossingSlack));
      if (k == 0) continue;
      const double sign = delta > 0 ? 1.0 : -1.0;
      const double span = log_now[i] - last_log_[i];
      for (std::uint64_t j = 1; j <= k; ++j) {
        // Crossing level relative to the previous frame's log value, mapped
        // linearly onto the frame interval.
        double frac = 1.0;
        if (span != 0.0) frac = std::clamp((reference_[i] + sign * c * j - last_log_[i]) / span, 0.0, 1.0);
        const auto offset = std::min<std::uint64_t>(dt, static_cast<std::uint64_t>(frac * dt));
        out.push_back({last_t_ + offset, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                       static_cast<std::int8_t>(sign > 0 ? 1 : -1)});
      }
      reference_[i] += sign * c * static_cast<double>(k);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  last_log_ = std::move(log_now);
  last_t_ = frame.t_us;
  return out;
}

LuminanceFrame parse_pgm(std::string_view bytes, std::uint64_t t_us) {
  // Header: magic, width, height, maxval separated by whitespace; '#' comments allowed.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  auto number = [&](std::string_view tok) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw ParseError("bad PGM header", pos);
    return v;
  };
  if (token() != "P5") throw ParseError("only binary PGM (P5) is supported", 0);
  LuminanceFrame f;
  f.t_us = t_us;
  f.width = number(token());
  f.height = number(token());
  const std::uint32_t maxval = number(token());
  if (f.width == 0 || f.height == 0 || maxval == 0 || maxval > 65535) throw ParseError("bad PGM header", pos);
  ++pos;  // single whitespace before the raster
  const std::size_t n = std::size_t{f.width} * f.height;
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + n * bpp) throw ParseError("truncated PGM raster", pos);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  f.luminance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t v = bpp == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : p[i];  // 16-bit PGM is big-endian
    f.luminance[i] = static_cast<double>(v) / maxval;
  }
  return f;
}

EventStream simulate_dvs(const std::vector<LuminanceFrame>& frames, const DvsSimConfig& cfg) {
  if (frames.size() < 2) throw Error("simulate_dvs needs at least two frames");
  DvsSimulator sim(cfg);
  EventStream s;
  s.geometry = {frames.front().width, frames.front().height};
  for (const auto& f : frames) {
    auto ev = sim.step(f);
    s.events.insert(s.events.end(), ev.begin(), ev.end());
  }
  return s;
}

}  // namespace evdet
