#include "evdet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evdet/error.hpp"
#include "evdet/io_util.hpp"

namespace evdet {
namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Keeps sizes inside (0, 1] even when exp() under- or overflows.
double clamp_size(double v) { return std::clamp(v, 1e-9, 1.0); }

}  // namespace

void YoloHeadSpec::validate() const {
  if (grid_h < 1 || grid_w < 1) throw Error("YOLO grid must be at least 1x1");
  if (anchors.empty()) throw Error("YOLO head needs at least one anchor");
  for (const auto& [aw, ah] : anchors) {
    if (!(aw > 0) || !(ah > 0)) throw Error("anchor sizes must be > 0");
  }
  if (num_classes < 1) throw Error("YOLO head needs at least one class");
}

std::vector<Detection> decode_yolo(const Tensor& raw, const YoloHeadSpec& head, double conf_threshold) {
  head.validate();
  const Shape& s = raw.shape();
  if (s.c != head.channels() || s.h != head.grid_h || s.w != head.grid_w) {
    throw ShapeError("head tensor " + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " does not match YOLO head " + std::to_string(head.channels()) + "x" +
                     std::to_string(head.grid_h) + "x" + std::to_string(head.grid_w));
  }
  std::vector<Detection> out;
  const int per = head.values_per_anchor();
  for (int row = 0; row < head.grid_h; ++row) {
    for (int col = 0; col < head.grid_w; ++col) {
      const float* v = raw.site(row, col);
      for (std::size_t b = 0; b < head.anchors.size(); ++b) {
        const float* a = v + b * per;
        int best = 0;
        for (int c = 1; c < head.num_classes; ++c) {
          if (a[5 + c] > a[5 + best]) best = c;
        }
        const double score = sigmoid(a[4]) * sigmoid(a[5 + best]);
        if (!(score > conf_threshold)) continue;
        Detection d;
        d.box.cx = (col + sigmoid(a[0])) / head.grid_w;
        d.box.cy = (row + sigmoid(a[1])) / head.grid_h;
        d.box.w = clamp_size(head.anchors[b].first * std::exp(static_cast<double>(a[2])));
        d.box.h = clamp_size(head.anchors[b].second * std::exp(static_cast<double>(a[3])));
        d.class_id = best;
        d.score = score;
        out.push_back(d);
      }
    }
  }
  return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    const Detection& d = dets[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == d.class_id && iou(k.box, d.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::string write_detections_csv(const std::vector<WindowDetections>& windows) {
  std::string out = "window_start_us,class_id,score,cx,cy,w,h\n";
  for (const auto& w : windows) {
    for (const auto& d : w.detections) {
      out += std::to_string(w.window_start_us) + ',' + std::to_string(d.class_id) + ',' + io::fixed(d.score, 6) +
             ',' + io::fixed(d.box.cx, 6) + ',' + io::fixed(d.box.cy, 6) + ',' + io::fixed(d.box.w, 6) + ',' +
             io::fixed(d.box.h, 6) + '\n';
    }
  }
  return out;
}

std::vector<WindowDetections> parse_detections_csv(std::string_view text) {
  std::vector<WindowDetections> out;
  bool header = false;
  io::for_each_line(text, [&](std::string_view line, std::uint64_t no) {
    if (!header) {
      if (line != "window_start_us,class_id,score,cx,cy,w,h") {
        throw ParseError("unexpected detections CSV header at line " + std::to_string(no), no);
      }
      header = true;
      return;
    }
    const auto f = io::split_csv(line);
    if (f.size() != 7) throw ParseError("expected 7 fields at line " + std::to_string(no), no);
    const auto start = io::parse_int64(f[0], no);
    if (start < 0) throw ParseError("negative window start at line " + std::to_string(no), no);
    Detection d;
    d.class_id = static_cast<int>(io::parse_int64(f[1], no));
    d.score = io::parse_double(f[2], no);
    d.box = {io::parse_double(f[3], no), io::parse_double(f[4], no), io::parse_double(f[5], no),
             io::parse_double(f[6], no)};
    if (d.class_id < 0 || d.score < 0 || d.score > 1) {
      throw ParseError("class or score out of range at line " + std::to_string(no), no);
    }
    const auto ustart = static_cast<std::uint64_t>(start);
    if (out.empty() || out.back().window_start_us != ustart) out.push_back({ustart, {}});
    out.back().detections.push_back(d);
  });
  if (!header) throw ParseError("missing detections CSV header", 0);
  return out;
}

}  // namespace evdet
