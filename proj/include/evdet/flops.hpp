#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evdet/network.hpp"

namespace evdet {

/// Multiply-accumulate = 2 FLOPs, pooling comparison = 1, ReLU = 1 per element.
struct LayerFlops {
  LayerKind kind = LayerKind::relu;
  std::uint64_t dense = 0;
  std::uint64_t executed = 0;

  double ratio() const { return dense ? static_cast<double>(executed) / static_cast<double>(dense) : 0.0; }
};

struct FlopReport {
  std::vector<LayerFlops> layers;

  std::uint64_t dense_total() const;
  std::uint64_t executed_total() const;
  std::uint64_t conv_dense() const;
  std::uint64_t conv_executed() const;
  double ratio() const;
  double conv_ratio() const;

  FlopReport& operator+=(const FlopReport& other);
  friend bool operator==(const FlopReport&, const FlopReport&) = default;
};

inline bool operator==(const LayerFlops& a, const LayerFlops& b) {
  return a.kind == b.kind && a.dense == b.dense && a.executed == b.executed;
}

/// FLOPs of one output site of `layer`.
std::uint64_t flops_per_site(const LayerSpec& layer, const Shape& out);

/// Dense cost of every layer with executed = dense.
FlopReport analytic_flops(const NetworkSpec& spec);

/// Layer-wise sums of reports over the same network. Empty input gives an
/// empty (all-zero) report.
FlopReport flop_summary(std::span<const FlopReport> reports);

/// CSV `layer,kind,dense_flops,executed_flops,ratio` plus a `total` row.
std::string write_flop_csv(const FlopReport& report);

}  // namespace evdet
