#pragma once

#include <memory>
#include <span>
#include <vector>

#include "evdet/engine.hpp"
#include "evdet/representations.hpp"

namespace evdet {

/// Cached per-layer activations for incremental inference. Single owner:
/// updates must be applied sequentially.
struct AsyncState {
  std::shared_ptr<const Network> net;
  std::vector<Tensor> activations;        // as Network::shapes(); [0] is the input
  std::vector<std::vector<Site>> dirty;   // recomputed sites per layer output in the latest update
  FlopReport cumulative;
};

struct SiteDelta {
  Site site;
  std::vector<float> values;  // new channel vector for the input site
};

struct AsyncUpdate {
  std::vector<Site> changed_output_sites;
  FlopReport flops;
};

/// Full dense pass that seeds the cache; its FLOPs open the cumulative report.
AsyncState async_init(std::shared_ptr<const Network> net, const Tensor& input);

/// Writes the deltas into the cached input and re-runs each layer only at
/// output sites whose receptive field contains a site that changed in the
/// layer below. Sites whose recomputed value is bitwise unchanged stop
/// propagating. Deltas are validated before anything is modified.
AsyncUpdate async_update(AsyncState& state, std::span<const SiteDelta> delta);

/// Sites where any channel of `next` differs from `prev`, carrying `next`'s values.
std::vector<SiteDelta> events_to_deltas(const RepFrame& prev, const RepFrame& next);

}  // namespace evdet
