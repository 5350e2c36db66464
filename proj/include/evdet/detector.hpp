#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evdet/bbox.hpp"
#include "evdet/tensor.hpp"

namespace evdet {

struct Detection {
  BBox box;
  int class_id = 0;
  double score = 0;  // in [0, 1]
};

struct YoloHeadSpec {
  int grid_h = 4;  // Sy
  int grid_w = 8;  // Sx
  std::vector<std::pair<double, double>> anchors{{0.05, 0.15}, {0.1, 0.3}, {0.2, 0.5}};
  int num_classes = 1;

  int values_per_anchor() const { return 5 + num_classes; }
  int channels() const { return static_cast<int>(anchors.size()) * values_per_anchor(); }
  void validate() const;
};

/// Decodes a (B * (5 + classes)) x Sy x Sx head output. Per anchor the
/// channels are [tx, ty, tw, th, objectness, class logits...]:
///   centre = ((col + sigmoid(tx)) / Sx, (row + sigmoid(ty)) / Sy)
///   size   = (aw * exp(tw), ah * exp(th)) clamped to (0, 1]
///   score  = sigmoid(objectness) * sigmoid(best class logit)
/// Only detections with score > conf_threshold are kept, in cell/anchor order.
std::vector<Detection> decode_yolo(const Tensor& raw, const YoloHeadSpec& head, double conf_threshold);

/// Greedy per-class suppression. Candidates are visited by descending score
/// (ties by input position); one is kept iff its IoU with every kept box of
/// the same class is <= iou_threshold. Result is sorted by descending score.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

struct WindowDetections {
  std::uint64_t window_start_us = 0;
  std::vector<Detection> detections;
};

/// CSV `window_start_us,class_id,score,cx,cy,w,h`, six decimals.
std::string write_detections_csv(const std::vector<WindowDetections>& windows);
std::vector<WindowDetections> parse_detections_csv(std::string_view text);

}  // namespace evdet
