#pragma once

#include <memory>
#include <span>
#include <vector>

#include "evdet/flops.hpp"
#include "evdet/kernels.hpp"
#include "evdet/network.hpp"
#include "evdet/tensor.hpp"

namespace evdet {

/// A weighted NetworkSpec prepared for execution: shapes resolved, conv
/// weights repacked for the kernels, and the zero-input response of every
/// layer precomputed. Immutable after construction.
class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t depth() const { return spec_.layers.size(); }
  /// shapes()[0] is the input, shapes()[i + 1] the output of layer i.
  const std::vector<Shape>& shapes() const { return shapes_; }
  const Shape& input_shape() const { return shapes_.front(); }
  const Shape& output_shape() const { return shapes_.back(); }

  /// Activation at shapes()[i] when the network input is all zeros. Sites
  /// that sparse execution never touches hold exactly this value.
  const std::shared_ptr<const Tensor>& background(std::size_t i) const { return background_[i]; }

  /// Runs layer `i` at the given output sites, reading `in` and writing `out`.
  void compute_sites(std::size_t i, const Tensor& in, std::span<const Site> sites, Tensor& out) const;
  /// Runs layer `i` at one output site into `dst` (shapes()[i + 1].c floats).
  void compute_site(std::size_t i, const Tensor& in, Site s, float* dst) const;
  /// Runs layer `i` over its whole output.
  void compute_dense(std::size_t i, const Tensor& in, Tensor& out) const;

  /// Output sites of layer `i` whose receptive field touches any of `inputs`,
  /// in raster order. `inputs` must be in-bounds for shapes()[i].
  std::vector<Site> affected_sites(std::size_t i, std::span<const Site> inputs) const;

  std::uint64_t site_flops(std::size_t i) const { return site_flops_[i]; }

 private:
  NetworkSpec spec_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<float>> packed_;  // per layer, [ky][kx][ci][co]
  std::vector<std::uint64_t> site_flops_;
  std::vector<std::shared_ptr<const Tensor>> background_;
};

struct DenseResult {
  Tensor output;
  FlopReport flops;
};

/// Plain dense execution; executed FLOPs equal dense FLOPs.
DenseResult dense_forward(const Network& net, const Tensor& input);
/// Same, keeping every intermediate activation (index as Network::shapes()).
std::vector<Tensor> dense_activations(const Network& net, const Tensor& input, FlopReport* flops = nullptr);

/// Active sites plus their channel vectors. Sites outside the active set take
/// their value from `background` (exact zero when it is null).
struct SparseTensor {
  Shape shape;
  std::vector<Site> sites;    // unique, raster order
  std::vector<float> values;  // sites.size() x shape.c
  std::shared_ptr<const Tensor> background;

  std::span<const float> value(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(shape.c), static_cast<std::size_t>(shape.c)};
  }
  Tensor to_dense() const;
};

/// Sites where any channel has |value| > threshold.
SparseTensor to_sparse(const Tensor& dense, float threshold = 0.0f);

struct SparseResult {
  SparseTensor output;
  FlopReport flops;
};

/// Regular (dilating) sparse execution: every layer computes exactly the
/// output sites whose receptive field meets an active input site; those
/// sites become the next layer's active set. `input` must have an implicit
/// zero background.
SparseResult sparse_forward(const Network& net, const SparseTensor& input);

}  // namespace evdet
