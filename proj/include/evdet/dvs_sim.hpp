#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "evdet/events.hpp"

namespace evdet {

struct DvsSimConfig {
  double contrast_threshold = 0.2;  // log-intensity units
  double luminance_floor = 1e-3;    // added before the log
};

/// Grayscale luminance frame, row-major, values >= 0.
struct LuminanceFrame {
  std::uint64_t t_us = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> luminance;
};

/// Incremental log-intensity threshold-crossing simulator. Each pixel keeps a
/// reference level; whenever the current log luminance has moved at least one
/// contrast threshold away from it, floor(|delta|/C) events are emitted with
/// timestamps interpolated between the two frames and the reference advances
/// by the same number of thresholds.
class DvsSimulator {
 public:
  explicit DvsSimulator(DvsSimConfig cfg = {});

  /// The first call only initialises the reference levels and returns no events.
  std::vector<Event> step(const LuminanceFrame& frame);

  bool initialized() const { return !reference_.empty(); }
  const std::vector<double>& reference() const { return reference_; }

 private:
  DvsSimConfig cfg_;
  std::uint64_t last_t_ = 0;
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<double> reference_;
  std::vector<double> last_log_;
};

/// Binary PGM (P5, 8- or 16-bit) scaled to [0, 1] by its maxval.
LuminanceFrame parse_pgm(std::string_view bytes, std::uint64_t t_us);

/// Needs >= 2 frames with strictly increasing timestamps.
EventStream simulate_dvs(const std::vector<LuminanceFrame>& frames, const DvsSimConfig& cfg = {});

}  // namespace evdet
