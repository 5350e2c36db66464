#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evdet/events.hpp"

namespace evdet {

/// Multi-channel C x H x W frame summarising one event window. Values are
/// stored channel-planar, row-major within each channel.
struct RepFrame {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> values;
  std::vector<std::string> channel_labels;
  std::uint64_t start_us = 0;
  std::uint64_t duration_us = 0;

  RepFrame() = default;
  RepFrame(std::uint32_t c, const SensorGeometry& g, std::vector<std::string> labels);

  std::size_t plane() const { return std::size_t{height} * width; }
  double& at(std::uint32_t c, std::uint32_t y, std::uint32_t x) {
    return values[c * plane() + std::size_t{y} * width + x];
  }
  double at(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return values[c * plane() + std::size_t{y} * width + x];
  }
};

enum class Normalization { none, maxabs, log1p };

struct RepConfig {
  double tau_decay_us = 10'000;
  double tau_leak_us = 100'000;
  Normalization normalization = Normalization::none;
};

enum class RepKind { histogram, last_polarity, decay, frequency, leaky, fused };

RepKind parse_rep_kind(std::string_view name);
std::string_view rep_kind_name(RepKind kind);
Normalization parse_normalization(std::string_view name);
std::uint32_t rep_channels(RepKind kind);

/// Per-pixel leaky accumulator carried across windows.
struct LeakyState {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> value;
  std::vector<std::uint64_t> last_update_us;

  LeakyState() = default;
  explicit LeakyState(const SensorGeometry& g);
};

/// ch0 = count of +1 events, ch1 = count of -1 events.
RepFrame build_histogram(const EventWindow& w);

/// Polarity of the latest event per pixel (later stream position wins ties), 0 elsewhere.
RepFrame build_last_polarity(const EventWindow& w);

/// p_last * exp(-(t_end - t_last) / tau_decay) per pixel.
RepFrame build_decay_surface(const EventWindow& w, const RepConfig& cfg);

/// Events per second per pixel over the window duration.
RepFrame build_frequency(const EventWindow& w);

/// Exponentially leaking signed accumulator. Each event decays the pixel's
/// value to its timestamp and adds its polarity; the frame reports every
/// pixel decayed to the window end. `state` is advanced in place.
RepFrame build_leaky_surface(const EventWindow& w, LeakyState& state, const RepConfig& cfg);

/// [last polarity, decay surface, maxabs-normalised frequency], then cfg.normalization.
RepFrame build_fused(const EventWindow& w, const RepConfig& cfg);

RepFrame normalize(RepFrame r, Normalization mode);

/// Dispatches on `kind`; `leaky` must be non-null for RepKind::leaky.
RepFrame build_representation(RepKind kind, const EventWindow& w, const RepConfig& cfg, LeakyState* leaky);

// REPF: "REPF", C/H/W as u16 LE, then C*H*W float32 LE.
std::string write_repf(const RepFrame& r);
RepFrame parse_repf(std::string_view bytes);

/// 8-bit preview with a per-channel affine map onto [0, 255]: binary PPM for
/// 3-channel frames, otherwise a PGM with channels stacked vertically.
std::string write_preview(const RepFrame& r);

}  // namespace evdet
