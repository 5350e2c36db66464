#include "evdet/representations.hpp"

#include <algorithm>
#include <cmath>

#include "evdet/error.hpp"
#include "evdet/io_util.hpp"

namespace evdet {
namespace {

RepFrame blank(const EventWindow& w, std::uint32_t channels, std::vector<std::string> labels) {
  RepFrame r(channels, w.geometry, std::move(labels));
  r.start_us = w.start_us;
  r.duration_us = w.duration_us;
  return r;
}

std::size_t index(const EventWindow& w, const Event& e) { return std::size_t{e.y} * w.geometry.width + e.x; }

}  // namespace

RepFrame::RepFrame(std::uint32_t c, const SensorGeometry& g, std::vector<std::string> labels)
    : channels(c), height(g.height), width(g.width), channel_labels(std::move(labels)) {
  if (channel_labels.size() != c) throw ShapeError("channel label count must equal channel count");
  values.assign(std::size_t{c} * plane(), 0.0);
}

LeakyState::LeakyState(const SensorGeometry& g)
    : width(g.width), height(g.height), value(g.pixels(), 0.0), last_update_us(g.pixels(), 0) {}

RepKind parse_rep_kind(std::string_view name) {
  if (name == "histogram") return RepKind::histogram;
  if (name == "polarity" || name == "last_polarity") return RepKind::last_polarity;
  if (name == "decay") return RepKind::decay;
  if (name == "frequency") return RepKind::frequency;
  if (name == "leaky") return RepKind::leaky;
  if (name == "fused") return RepKind::fused;
  throw Error("unknown representation kind '" + std::string(name) + "'");
}

std::string_view rep_kind_name(RepKind kind) {
  switch (kind) {
    case RepKind::histogram: return "histogram";
    case RepKind::last_polarity: return "polarity";
    case RepKind::decay: return "decay";
    case RepKind::frequency: return "frequency";
    case RepKind::leaky: return "leaky";
    case RepKind::fused: return "fused";
  }
  return "?";
}

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::none;
  if (name == "maxabs") return Normalization::maxabs;
  if (name == "log1p") return Normalization::log1p;
  throw Error("unknown normalization '" + std::string(name) + "'");
}

std::uint32_t rep_channels(RepKind kind) {
  switch (kind) {
    case RepKind::histogram: return 2;
    case RepKind::fused: return 3;
    default: return 1;
  }
}

RepFrame build_histogram(const EventWindow& w) {
  RepFrame r = blank(w, 2, {"count_pos", "count_neg"});
  for (const auto& e : w.events) r.values[(e.p > 0 ? 0 : r.plane()) + index(w, e)] += 1.0;
  return r;
}

RepFrame build_last_polarity(const EventWindow& w) {
  RepFrame r = blank(w, 1, {"last_polarity"});
  // Events are time-ordered, so a forward pass leaves the latest (and, among
  // equal timestamps, the last-in-stream) polarity.
  for (const auto& e : w.events) r.values[index(w, e)] = e.p;
  return r;
}

RepFrame build_decay_surface(const EventWindow& w, const RepConfig& cfg) {
  if (!(cfg.tau_decay_us > 0)) throw Error("tau_decay_us must be > 0");
  RepFrame r = blank(w, 1, {"decay_surface"});
  std::vector<const Event*> last(r.plane(), nullptr);
  for (const auto& e : w.events) last[index(w, e)] = &e;
  const std::uint64_t t_ref = w.end_us();
  for (std::size_t i = 0; i < last.size(); ++i) {
    if (!last[i]) continue;
    const double elapsed = static_cast<double>(t_ref - last[i]->t);
    r.values[i] = last[i]->p * std::exp(-elapsed / cfg.tau_decay_us);
  }
  return r;
}

RepFrame build_frequency(const EventWindow& w) {
  if (w.duration_us == 0) throw Error("window duration must be > 0");
  RepFrame r = blank(w, 1, {"frequency_hz"});
  std::vector<std::uint32_t> counts(r.plane(), 0);
  for (const auto& e : w.events) ++counts[index(w, e)];
  const double seconds = static_cast<double>(w.duration_us) * 1e-6;
  for (std::size_t i = 0; i < counts.size(); ++i) r.values[i] = counts[i] / seconds;
  return r;
}

RepFrame build_leaky_surface(const EventWindow& w, LeakyState& state, const RepConfig& cfg) {
  if (!(cfg.tau_leak_us > 0)) throw Error("tau_leak_us must be > 0");
  if (state.width != w.geometry.width || state.height != w.geometry.height) {
    throw ShapeError("leaky state geometry does not match the window");
  }
  for (const auto& e : w.events) {
    const std::size_t i = index(w, e);
    if (e.t < state.last_update_us[i]) throw Error("leaky surface requires time-ordered, non-overlapping windows");
    const double elapsed = static_cast<double>(e.t - state.last_update_us[i]);
    state.value[i] = state.value[i] * std::exp(-elapsed / cfg.tau_leak_us) + e.p;
    state.last_update_us[i] = e.t;
  }
  RepFrame r = blank(w, 1, {"leaky_surface"});
  const std::uint64_t t_ref = w.end_us();
  for (std::size_t i = 0; i < r.plane(); ++i) {
    if (state.value[i] == 0.0) continue;
    const double elapsed = static_cast<double>(t_ref - state.last_update_us[i]);
    r.values[i] = state.value[i] * std::exp(-elapsed / cfg.tau_leak_us);
  }
  return r;
}

RepFrame build_fused(const EventWindow& w, const RepConfig& cfg) {
  RepFrame r = blank(w, 3, {"last_polarity", "decay_surface", "frequency_norm"});
  const RepFrame pol = build_last_polarity(w);
  const RepFrame dec = build_decay_surface(w, cfg);
  const RepFrame freq = normalize(build_frequency(w), Normalization::maxabs);
  const std::size_t n = r.plane();
  std::copy(pol.values.begin(), pol.values.end(), r.values.begin());
  std::copy(dec.values.begin(), dec.values.end(), r.values.begin() + n);
  std::copy(freq.values.begin(), freq.values.end(), r.values.begin() + 2 * n);
  return normalize(std::move(r), cfg.normalization);
}

RepFrame normalize(RepFrame r, Normalization mode) {
  const std::size_t n = r.plane();
  switch (mode) {
    case Normalization::none:
      break;
    case Normalization::maxabs:
      for (std::uint32_t c = 0; c < r.channels; ++c) {
        auto first = r.values.begin() + c * n;
        double peak = 0.0;
        for (auto it = first; it != first + n; ++it) peak = std::max(peak, std::abs(*it));
        if (peak == 0.0) continue;
        for (auto it = first; it != first + n; ++it) *it /= peak;
      }
      break;
    case Normalization::log1p:
      for (double& v : r.values) v = std::copysign(std::log1p(std::abs(v)), v);
      break;
  }
  return r;
}

RepFrame build_representation(RepKind kind, const EventWindow& w, const RepConfig& cfg, LeakyState* leaky) {
  switch (kind) {
    case RepKind::histogram: return normalize(build_histogram(w), cfg.normalization);
    case RepKind::last_polarity: return normalize(build_last_polarity(w), cfg.normalization);
    case RepKind::decay: return normalize(build_decay_surface(w, cfg), cfg.normalization);
    case RepKind::frequency: return normalize(build_frequency(w), cfg.normalization);
    case RepKind::leaky:
      if (!leaky) throw Error("leaky representation needs a LeakyState");
      return normalize(build_leaky_surface(w, *leaky, cfg), cfg.normalization);
    case RepKind::fused: return build_fused(w, cfg);
  }
  throw Error("unhandled representation kind");
}

std::string write_repf(const RepFrame& r) {
  if (r.channels > 0xffff || r.height > 0xffff || r.width > 0xffff) throw Error("frame too large for REPF");
  if (r.values.size() != r.channels * r.plane()) throw ShapeError("frame value count does not match its shape");
  std::string out = "REPF";
  out.reserve(10 + r.values.size() * 4);
  io::put_u16(out, static_cast<std::uint16_t>(r.channels));
  io::put_u16(out, static_cast<std::uint16_t>(r.height));
  io::put_u16(out, static_cast<std::uint16_t>(r.width));
  for (double v : r.values) io::put_f32(out, static_cast<float>(v));
  return out;
}

RepFrame parse_repf(std::string_view bytes) {
  if (bytes.size() < 10 || bytes.substr(0, 4) != "REPF") throw ParseError("missing REPF header", 0);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  RepFrame r;
  r.channels = io::get_u16(p + 4);
  r.height = io::get_u16(p + 6);
  r.width = io::get_u16(p + 8);
  const std::size_t n = r.channels * r.plane();
  if (bytes.size() != 10 + n * 4) throw ParseError("REPF payload size does not match header", 10);
  r.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.values[i] = io::get_f32(p + 10 + 4 * i);
  for (std::uint32_t c = 0; c < r.channels; ++c) r.channel_labels.push_back("ch" + std::to_string(c));
  return r;
}

std::string write_preview(const RepFrame& r) {
  const std::size_t n = r.plane();
  auto to_byte = [](double v, double lo, double hi) {
    if (hi <= lo) return static_cast<unsigned char>(0);
    return static_cast<unsigned char>(std::lround(255.0 * (v - lo) / (hi - lo)));
  };
  std::vector<std::pair<double, double>> range(r.channels);
  for (std::uint32_t c = 0; c < r.channels; ++c) {
    auto first = r.values.begin() + c * n;
    auto [lo, hi] = std::minmax_element(first, first + n);
    range[c] = n ? std::pair{*lo, *hi} : std::pair{0.0, 0.0};
  }

  std::string out;
  if (r.channels == 3) {
    out = "P6\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
    for (std::size_t i = 0; i < n; ++i) {
      for (std::uint32_t c = 0; c < 3; ++c) {
        out.push_back(static_cast<char>(to_byte(r.values[c * n + i], range[c].first, range[c].second)));
      }
    }
    return out;
  }
  out = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height * r.channels) + "\n255\n";
  for (std::uint32_t c = 0; c < r.channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(static_cast<char>(to_byte(r.values[c * n + i], range[c].first, range[c].second)));
    }
  }
  return out;
}

}  // namespace evdet
