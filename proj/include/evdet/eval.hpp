#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "evdet/bbox.hpp"
#include "evdet/detector.hpp"
#include "evdet/synthetic.hpp"

namespace evdet {

struct GtObject {
  BBox box;
  int class_id = 0;
};

/// Ground-truth objects keyed by window start.
struct GroundTruth {
  std::map<std::uint64_t, std::vector<GtObject>> windows;

  std::size_t count(int class_id) const;
};

GroundTruth ground_truth_from(const std::vector<GtAnnotation>& annotations, const SensorGeometry& g);

/// Parses the `window_start_us,x,y,w,h,class_id` CSV (pixel units).
GroundTruth parse_ground_truth(std::string_view text, const SensorGeometry& g);
GroundTruth load_ground_truth(const std::filesystem::path& path, const SensorGeometry& g);

struct MatchResult {
  std::vector<bool> true_positive;  // per input detection
  std::size_t false_negatives = 0;

  std::size_t tp() const;
  std::size_t fp() const { return true_positive.size() - tp(); }
};

/// Detections are visited by descending score (ties by input position); each
/// claims the unmatched same-class object with the highest IoU >= iou_thresh.
MatchResult match_detections(const std::vector<Detection>& preds, const std::vector<GtObject>& gts, double iou_thresh);

struct PrPoint {
  double recall = 0;
  double precision = 0;
};

struct ApResult {
  double ap = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  std::vector<PrPoint> curve;
};

/// AP for one class at one IoU threshold: matching per window, then one
/// precision/recall curve over all detections sorted globally by score,
/// integrated with 101-point interpolation (mean over r = 0, 0.01, ..., 1 of
/// the best precision at recall >= r).
ApResult average_precision(const std::vector<WindowDetections>& preds, const GroundTruth& gt, int class_id,
                           double iou_thresh);

inline constexpr std::array<double, 10> kIouLadder{0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};

struct ClassMetrics {
  int class_id = 0;
  std::array<double, 10> ap{};  // one per kIouLadder entry
  double ap50 = 0;
  double ap5095 = 0;
  std::size_t tp = 0, fp = 0, fn = 0;  // at IoU 0.5
  std::array<std::vector<PrPoint>, 10> curves;
};

struct EvalResult {
  std::vector<ClassMetrics> classes;
  double map50 = 0;
  double map5095 = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

/// Classes are those present in either predictions or ground truth; a class
/// with no ground truth scores AP 0. No classes at all gives all-zero metrics.
EvalResult map_metrics(const std::vector<WindowDetections>& preds, const GroundTruth& gt);

/// CSV `class_id,ap50,ap5095,tp,fp,fn` with a trailing `summary` row.
std::string write_eval_csv(const EvalResult& r);
/// CSV `recall,precision` for one class/threshold curve.
std::string write_pr_csv(const std::vector<PrPoint>& curve);

}  // namespace evdet
