#include "evdet/engine.hpp"

#include <algorithm>
#include <cmath>

#include "evdet/error.hpp"

namespace evdet {
namespace {

void check_input(const Network& net, const Shape& s) {
  if (!(s == net.input_shape())) {
    throw ShapeError("input shape " + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " does not match network input " + std::to_string(net.input_shape().c) + "x" +
                     std::to_string(net.input_shape().h) + "x" + std::to_string(net.input_shape().w));
  }
}

// Output range [lo, hi] along one axis touched by input coordinate `i`.
std::pair<int, int> touched(int i, int k, int stride, int pad, int out_extent) {
  const int lo_num = i + pad - k + 1;
  const int lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
  const int hi = std::min((i + pad) / stride, out_extent - 1);
  return {lo, hi};
}

}  // namespace

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.resolve();
  if (!spec_.has_weights()) throw Error("network has no weights; load or initialise them first");
  shapes_ = spec_.shapes();

  packed_.resize(depth());
  site_flops_.resize(depth());
  for (std::size_t i = 0; i < depth(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    site_flops_[i] = flops_per_site(l, shapes_[i + 1]);
    if (l.kind != LayerKind::conv) continue;
    auto& p = packed_[i];
    p.resize(l.weight_count());
    for (int co = 0; co < l.cout; ++co)
      for (int ci = 0; ci < l.cin; ++ci)
        for (int ky = 0; ky < l.k; ++ky)
          for (int kx = 0; kx < l.k; ++kx) {
            const std::size_t src = ((static_cast<std::size_t>(co) * l.cin + ci) * l.k + ky) * l.k + kx;
            const std::size_t dst = ((static_cast<std::size_t>(ky) * l.k + kx) * l.cin + ci) * l.cout + co;
            p[dst] = l.weights[src];
          }
  }

  background_.resize(depth() + 1);
  auto act = std::make_shared<Tensor>(shapes_[0]);
  background_[0] = act;
  for (std::size_t i = 0; i < depth(); ++i) {
    auto next = std::make_shared<Tensor>(shapes_[i + 1]);
    compute_dense(i, *background_[i], *next);
    background_[i + 1] = std::move(next);
  }
}

void Network::compute_site(std::size_t i, const Tensor& in, Site s, float* dst) const {
  const LayerSpec& l = spec_.layers[i];
  const Shape& is = shapes_[i];
  const auto& k = kernels::active();
  switch (l.kind) {
    case LayerKind::conv: {
      kernels::ConvParams p{is.h, is.w, l.cin, l.cout, l.k, l.stride, l.pad(), packed_[i].data(), l.bias.data()};
      k.conv_site(in.data().data(), p, s.y, s.x, dst);
      break;
    }
    case LayerKind::maxpool: {
      kernels::PoolParams p{is.h, is.w, is.c, l.k, l.stride};
      k.maxpool_site(in.data().data(), p, s.y, s.x, dst);
      break;
    }
    case LayerKind::relu:
      k.relu(in.site(s.y, s.x), dst, static_cast<std::size_t>(is.c));
      break;
  }
}

void Network::compute_sites(std::size_t i, const Tensor& in, std::span<const Site> sites, Tensor& out) const {
  for (const Site& s : sites) compute_site(i, in, s, out.site(s.y, s.x));
}

void Network::compute_dense(std::size_t i, const Tensor& in, Tensor& out) const {
  const Shape& os = shapes_[i + 1];
  if (spec_.layers[i].kind == LayerKind::relu) {
    kernels::active().relu(in.data().data(), out.data().data(), os.size());
    return;
  }
  for (int y = 0; y < os.h; ++y)
    for (int x = 0; x < os.w; ++x) compute_site(i, in, {y, x}, out.site(y, x));
}

std::vector<Site> Network::affected_sites(std::size_t i, std::span<const Site> inputs) const {
  const LayerSpec& l = spec_.layers[i];
  const Shape& os = shapes_[i + 1];
  if (l.kind == LayerKind::relu) {
    std::vector<Site> out(inputs.begin(), inputs.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  std::vector<unsigned char> mark(os.sites(), 0);
  for (const Site& s : inputs) {
    const auto [y0, y1] = touched(s.y, l.k, l.stride, l.pad(), os.h);
    const auto [x0, x1] = touched(s.x, l.k, l.stride, l.pad(), os.w);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) mark[static_cast<std::size_t>(y) * os.w + x] = 1;
  }
  std::vector<Site> out;
  for (int y = 0; y < os.h; ++y)
    for (int x = 0; x < os.w; ++x)
      if (mark[static_cast<std::size_t>(y) * os.w + x]) out.push_back({y, x});
  return out;
}

std::vector<Tensor> dense_activations(const Network& net, const Tensor& input, FlopReport* flops) {
  check_input(net, input.shape());
  std::vector<Tensor> acts;
  acts.reserve(net.depth() + 1);
  acts.push_back(input);
  for (std::size_t i = 0; i < net.depth(); ++i) {
    Tensor out(net.shapes()[i + 1]);
    net.compute_dense(i, acts.back(), out);
    acts.push_back(std::move(out));
  }
  if (flops) *flops = analytic_flops(net.spec());
  return acts;
}

DenseResult dense_forward(const Network& net, const Tensor& input) {
  DenseResult r;
  auto acts = dense_activations(net, input, &r.flops);
  r.output = std::move(acts.back());
  return r;
}

Tensor SparseTensor::to_dense() const {
  Tensor t = background ? *background : Tensor(shape);
  if (!(t.shape() == shape)) throw ShapeError("sparse tensor background has the wrong shape");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::copy_n(values.data() + i * shape.c, shape.c, t.site(sites[i].y, sites[i].x));
  }
  return t;
}

SparseTensor to_sparse(const Tensor& dense, float threshold) {
  if (!(threshold >= 0.0f)) throw Error("sparsity threshold must be >= 0");
  SparseTensor s;
  s.shape = dense.shape();
  for (int y = 0; y < s.shape.h; ++y) {
    for (int x = 0; x < s.shape.w; ++x) {
      const float* v = dense.site(y, x);
      if (std::any_of(v, v + s.shape.c, [&](float a) { return std::abs(a) > threshold; })) {
        s.sites.push_back({y, x});
        s.values.insert(s.values.end(), v, v + s.shape.c);
      }
    }
  }
  return s;
}

SparseResult sparse_forward(const Network& net, const SparseTensor& input) {
  check_input(net, input.shape);
  if (input.background) throw Error("sparse_forward expects an input with an implicit zero background");
  for (const Site& s : input.sites) {
    if (s.y < 0 || s.y >= input.shape.h || s.x < 0 || s.x >= input.shape.w) {
      throw ShapeError("active site out of bounds");
    }
  }
  if (input.values.size() != input.sites.size() * static_cast<std::size_t>(input.shape.c)) {
    throw ShapeError("sparse tensor value count does not match its sites");
  }

  SparseResult r;
  Tensor cur = input.to_dense();
  std::vector<Site> active = input.sites;
  for (std::size_t i = 0; i < net.depth(); ++i) {
    std::vector<Site> computed = net.affected_sites(i, active);
    Tensor next = *net.background(i + 1);
    net.compute_sites(i, cur, computed, next);
    const Shape& os = net.shapes()[i + 1];
    r.flops.layers.push_back({net.spec().layers[i].kind, net.site_flops(i) * os.sites(),
                              net.site_flops(i) * computed.size()});
    cur = std::move(next);
    active = std::move(computed);
  }

  SparseTensor& out = r.output;
  out.shape = net.output_shape();
  out.background = net.background(net.depth());
  out.values.reserve(active.size() * out.shape.c);
  for (const Site& s : active) {
    const float* v = cur.site(s.y, s.x);
    out.values.insert(out.values.end(), v, v + out.shape.c);
  }
  out.sites = std::move(active);
  return r;
}

}  // namespace evdet
