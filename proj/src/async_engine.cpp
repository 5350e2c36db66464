#include "evdet/async_engine.hpp"

#include <algorithm>
#include <cstring>

#include "evdet/error.hpp"

namespace evdet {

AsyncState async_init(std::shared_ptr<const Network> net, const Tensor& input) {
  if (!net) throw Error("async_init needs a network");
  AsyncState s;
  s.activations = dense_activations(*net, input, &s.cumulative);
  s.dirty.assign(net->depth() + 1, {});
  s.net = std::move(net);
  return s;
}

AsyncUpdate async_update(AsyncState& state, std::span<const SiteDelta> delta) {
  if (!state.net) throw Error("async state is not initialised");
  const Network& net = *state.net;
  const Shape& in = net.input_shape();
  for (const auto& d : delta) {
    if (d.site.y < 0 || d.site.y >= in.h || d.site.x < 0 || d.site.x >= in.w) {
      throw Error("delta site (" + std::to_string(d.site.y) + "," + std::to_string(d.site.x) + ") out of bounds");
    }
    if (d.values.size() != static_cast<std::size_t>(in.c)) throw ShapeError("delta channel count mismatch");
  }

  const std::size_t bytes_in = sizeof(float) * static_cast<std::size_t>(in.c);
  std::vector<unsigned char> mark(in.sites(), 0);
  Tensor& input = state.activations[0];
  for (const auto& d : delta) {
    float* dst = input.site(d.site.y, d.site.x);
    if (std::memcmp(dst, d.values.data(), bytes_in) == 0) continue;
    std::memcpy(dst, d.values.data(), bytes_in);
    mark[static_cast<std::size_t>(d.site.y) * in.w + d.site.x] = 1;
  }
  std::vector<Site> changed;
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      if (mark[static_cast<std::size_t>(y) * in.w + x]) changed.push_back({y, x});
  state.dirty[0] = changed;

  AsyncUpdate r;
  std::vector<float> scratch;
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const Shape& os = net.shapes()[i + 1];
    std::vector<Site> recompute = net.affected_sites(i, changed);
    scratch.resize(static_cast<std::size_t>(os.c));
    std::vector<Site> next_changed;
    Tensor& out = state.activations[i + 1];
    for (const Site& s : recompute) {
      net.compute_site(i, state.activations[i], s, scratch.data());
      float* dst = out.site(s.y, s.x);
      if (std::memcmp(dst, scratch.data(), sizeof(float) * scratch.size()) == 0) continue;
      std::memcpy(dst, scratch.data(), sizeof(float) * scratch.size());
      next_changed.push_back(s);
    }
    r.flops.layers.push_back(
        {net.spec().layers[i].kind, net.site_flops(i) * os.sites(), net.site_flops(i) * recompute.size()});
    state.dirty[i + 1] = std::move(recompute);
    changed = std::move(next_changed);
  }
  r.changed_output_sites = std::move(changed);
  state.cumulative += r.flops;
  return r;
}

std::vector<SiteDelta> events_to_deltas(const RepFrame& prev, const RepFrame& next) {
  if (prev.channels != next.channels || prev.height != next.height || prev.width != next.width) {
    throw ShapeError("representation frames differ in shape");
  }
  std::vector<SiteDelta> out;
  const std::size_t n = next.plane();
  for (std::uint32_t y = 0; y < next.height; ++y) {
    for (std::uint32_t x = 0; x < next.width; ++x) {
      const std::size_t i = std::size_t{y} * next.width + x;
      bool differs = false;
      for (std::uint32_t c = 0; c < next.channels && !differs; ++c) differs = prev.values[c * n + i] != next.values[c * n + i];
      if (!differs) continue;
      SiteDelta d{{static_cast<int>(y), static_cast<int>(x)}, std::vector<float>(next.channels)};
      for (std::uint32_t c = 0; c < next.channels; ++c) d.values[c] = static_cast<float>(next.values[c * n + i]);
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace evdet
