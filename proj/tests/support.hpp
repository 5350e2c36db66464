#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include "evdet/events.hpp"

namespace evdet::testing {

/// Sorted random events on `g` with timestamps in [0, span_us).
inline EventStream random_stream(std::mt19937_64& rng, SensorGeometry g, std::size_t n, std::uint64_t span_us) {
  EventStream s;
  s.geometry = g;
  std::uniform_int_distribution<std::uint64_t> t(0, span_us - 1);
  std::uniform_int_distribution<std::uint32_t> x(0, g.width - 1), y(0, g.height - 1);
  std::bernoulli_distribution pos(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    s.events.push_back({t(rng), static_cast<std::uint16_t>(x(rng)), static_cast<std::uint16_t>(y(rng)),
                        static_cast<std::int8_t>(pos(rng) ? 1 : -1)});
  }
  std::stable_sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return s;
}

/// Window [start, start + duration) holding random events.
inline EventWindow random_window(std::mt19937_64& rng, SensorGeometry g, std::size_t n, std::uint64_t start,
                                 std::uint64_t duration) {
  EventStream s = random_stream(rng, g, n, duration);
  EventWindow w;
  w.start_us = start;
  w.duration_us = duration;
  w.geometry = g;
  for (auto& e : s.events) {
    e.t += start;
    w.events.push_back(e);
  }
  return w;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("evdet_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace evdet::testing
