#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evdet {

/// One sensor event: timestamp in microseconds, pixel column/row, polarity.
struct Event {
  std::uint64_t t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;  // -1 or +1

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
  std::uint32_t width = 1280;
  std::uint32_t height = 720;

  bool contains(std::uint32_t x, std::uint32_t y) const { return x < width && y < height; }
  std::size_t pixels() const { return std::size_t{width} * height; }
  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// Throws if either dimension is zero or exceeds the 16-bit file range.
void validate_geometry(const SensorGeometry& g);

/// Parses "WxH" (e.g. "256x144").
SensorGeometry parse_geometry(std::string_view text);

/// Time-ordered events (non-decreasing t), all within `geometry`.
struct EventStream {
  SensorGeometry geometry;
  std::vector<Event> events;
};

/// Events with start_us <= t < start_us + duration_us, in stream order.
struct EventWindow {
  std::uint64_t start_us = 0;
  std::uint64_t duration_us = 10'000;
  SensorGeometry geometry;
  std::vector<Event> events;

  std::uint64_t end_us() const { return start_us + duration_us; }
};

enum class StreamFormat { binary_evs, csv };

struct ParseOptions {
  /// CSV carries no geometry; binary files override this with their header.
  SensorGeometry geometry{};
  /// Stable-sort by timestamp instead of rejecting non-monotone input.
  bool sort = false;
  /// Shift all timestamps so the first record sits at t = 0.
  bool rebase_epoch = false;
};

EventStream parse_stream(std::string_view source, StreamFormat format, const ParseOptions& opts = {});
std::string write_stream(const EventStream& stream, StreamFormat format);

/// Infers the format from the leading magic bytes.
StreamFormat detect_format(std::string_view source);

/// Checks ordering, polarity and bounds; throws evdet::Error on the first violation.
void validate_stream(const EventStream& stream);

/// Cuts the stream into windows starting at t = 0 and advancing by
/// `stride_us`. Windows are emitted while their start is <= the last event
/// timestamp, or, when `span_us` is given, while their start is < span_us.
std::vector<EventWindow> slice_windows(const EventStream& stream, std::uint64_t duration_us,
                                       std::uint64_t stride_us,
                                       std::optional<std::uint64_t> span_us = std::nullopt);

}  // namespace evdet
