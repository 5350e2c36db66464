#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "evdet/async_engine.hpp"
#include "evdet/detector.hpp"
#include "evdet/engine.hpp"
#include "evdet/representations.hpp"

namespace evdet {

enum class ExecMode { dense, sparse, async };

ExecMode parse_exec_mode(std::string_view name);
std::string_view exec_mode_name(ExecMode mode);

struct PipelineConfig {
  RepKind rep = RepKind::histogram;
  RepConfig rep_cfg{};
  YoloHeadSpec head{};
  ExecMode mode = ExecMode::dense;
  double conf_threshold = 0.5;
  double nms_iou = 0.5;
  float sparse_threshold = 0.0f;  // to_sparse threshold in sparse mode
};

struct PipelineResult {
  std::vector<Detection> detections;
  FlopReport flops;
};

/// Head geometry matching a network's output map.
YoloHeadSpec head_for(const Network& net, std::vector<std::pair<double, double>> anchors, int num_classes);

/// Representation -> forward pass -> YOLO decode -> NMS, one window at a
/// time. Async mode and the leaky representation carry state from window to
/// window, so windows must be fed in time order.
class Pipeline {
 public:
  Pipeline(std::shared_ptr<const Network> net, PipelineConfig cfg);

  PipelineResult run(const EventWindow& window);
  void reset();

  const PipelineConfig& config() const { return cfg_; }
  const Network& network() const { return *net_; }

 private:
  Tensor forward(const RepFrame& rep, FlopReport& flops);

  std::shared_ptr<const Network> net_;
  PipelineConfig cfg_;
  std::optional<LeakyState> leaky_;
  std::optional<AsyncState> async_;
  std::optional<RepFrame> prev_rep_;
};

/// One-shot pipeline run; async mode degenerates to its initial dense pass.
PipelineResult run_pipeline(const EventWindow& window, std::shared_ptr<const Network> net, const PipelineConfig& cfg);

}  // namespace evdet
