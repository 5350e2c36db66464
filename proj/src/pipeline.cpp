#include "evdet/pipeline.hpp"

#include "evdet/error.hpp"

namespace evdet {

ExecMode parse_exec_mode(std::string_view name) {
  if (name == "dense") return ExecMode::dense;
  if (name == "sparse") return ExecMode::sparse;
  if (name == "async") return ExecMode::async;
  throw Error("unknown execution mode '" + std::string(name) + "'");
}

std::string_view exec_mode_name(ExecMode mode) {
  switch (mode) {
    case ExecMode::dense: return "dense";
    case ExecMode::sparse: return "sparse";
    case ExecMode::async: return "async";
  }
  return "?";
}

YoloHeadSpec head_for(const Network& net, std::vector<std::pair<double, double>> anchors, int num_classes) {
  YoloHeadSpec h;
  h.grid_h = net.output_shape().h;
  h.grid_w = net.output_shape().w;
  h.anchors = std::move(anchors);
  h.num_classes = num_classes;
  h.validate();
  return h;
}

Pipeline::Pipeline(std::shared_ptr<const Network> net, PipelineConfig cfg) : net_(std::move(net)), cfg_(std::move(cfg)) {
  if (!net_) throw Error("pipeline needs a network");
  cfg_.head.validate();
  const Shape& out = net_->output_shape();
  if (out.c != cfg_.head.channels() || out.h != cfg_.head.grid_h || out.w != cfg_.head.grid_w) {
    throw ShapeError("network output " + std::to_string(out.c) + "x" + std::to_string(out.h) + "x" +
                     std::to_string(out.w) + " does not match the YOLO head (" + std::to_string(cfg_.head.channels()) +
                     " channels on a " + std::to_string(cfg_.head.grid_h) + "x" + std::to_string(cfg_.head.grid_w) +
                     " grid)");
  }
  if (static_cast<int>(rep_channels(cfg_.rep)) != net_->input_shape().c) {
    throw ShapeError("representation '" + std::string(rep_kind_name(cfg_.rep)) + "' has " +
                     std::to_string(rep_channels(cfg_.rep)) + " channels but the network expects " +
                     std::to_string(net_->input_shape().c));
  }
}

void Pipeline::reset() {
  leaky_.reset();
  async_.reset();
  prev_rep_.reset();
}

Tensor Pipeline::forward(const RepFrame& rep, FlopReport& flops) {
  const Shape in_shape{static_cast<int>(rep.channels), static_cast<int>(rep.height), static_cast<int>(rep.width)};
  switch (cfg_.mode) {
    case ExecMode::dense: {
      auto r = dense_forward(*net_, Tensor::from_planar(in_shape, rep.values));
      flops = std::move(r.flops);
      return std::move(r.output);
    }
    case ExecMode::sparse: {
      auto r = sparse_forward(*net_, to_sparse(Tensor::from_planar(in_shape, rep.values), cfg_.sparse_threshold));
      flops = std::move(r.flops);
      return r.output.to_dense();
    }
    case ExecMode::async: {
      if (!async_) {
        async_ = async_init(net_, Tensor::from_planar(in_shape, rep.values));
        flops = async_->cumulative;
      } else {
        const auto deltas = events_to_deltas(*prev_rep_, rep);
        flops = async_update(*async_, deltas).flops;
      }
      prev_rep_ = rep;
      return async_->activations.back();
    }
  }
  throw Error("unhandled execution mode");
}

PipelineResult Pipeline::run(const EventWindow& window) {
  const Shape& in = net_->input_shape();
  if (static_cast<int>(window.geometry.width) != in.w || static_cast<int>(window.geometry.height) != in.h) {
    throw ShapeError("window geometry " + std::to_string(window.geometry.width) + "x" +
                     std::to_string(window.geometry.height) + " does not match network input " + std::to_string(in.w) +
                     "x" + std::to_string(in.h));
  }
  if (cfg_.rep == RepKind::leaky && !leaky_) leaky_.emplace(window.geometry);
  const RepFrame rep = build_representation(cfg_.rep, window, cfg_.rep_cfg, leaky_ ? &*leaky_ : nullptr);

  PipelineResult r;
  const Tensor raw = forward(rep, r.flops);
  r.detections = nms(decode_yolo(raw, cfg_.head, cfg_.conf_threshold), cfg_.nms_iou);
  return r;
}

PipelineResult run_pipeline(const EventWindow& window, std::shared_ptr<const Network> net, const PipelineConfig& cfg) {
  Pipeline p(std::move(net), cfg);
  return p.run(window);
}

}  // namespace evdet
