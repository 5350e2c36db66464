#pragma once

#include <cstddef>
#include <string_view>

// Per-site compute kernels for the convolution engine. Every kernel exists as
// a scalar reference and, on x86-64, an AVX2+FMA variant selected at run
// time. Both variants accumulate in the same order with fused multiply-adds,
// so their results are bitwise identical.
namespace evdet::kernels {

enum class Isa { scalar, avx2 };

struct ConvParams {
  int in_h = 0, in_w = 0;
  int cin = 0, cout = 0;
  int k = 1, stride = 1, pad = 0;
  const float* weights = nullptr;  // packed [ky][kx][ci][co]
  const float* bias = nullptr;     // [co]
};

struct PoolParams {
  int in_h = 0, in_w = 0;
  int c = 0;
  int k = 1, stride = 1;
};

/// `in` is a site-major (H x W x C) buffer; `out` receives one channel vector.
using ConvSiteFn = void (*)(const float* in, const ConvParams& p, int oy, int ox, float* out);
using PoolSiteFn = void (*)(const float* in, const PoolParams& p, int oy, int ox, float* out);
using ReluFn = void (*)(const float* in, float* out, std::size_t n);

struct KernelTable {
  ConvSiteFn conv_site;
  PoolSiteFn maxpool_site;
  ReluFn relu;
};

bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);

/// Best supported ISA, unless EVDET_ISA=scalar|avx2 overrides it at first use.
Isa active_isa();
/// Throws evdet::Error when `isa` is not supported by this CPU/build.
void set_active_isa(Isa isa);

const KernelTable& table(Isa isa);
inline const KernelTable& active() { return table(active_isa()); }

namespace scalar {
void conv_site(const float* in, const ConvParams& p, int oy, int ox, float* out);
void maxpool_site(const float* in, const PoolParams& p, int oy, int ox, float* out);
void relu(const float* in, float* out, std::size_t n);
}  // namespace scalar

#if defined(EVDET_HAVE_AVX2)
namespace avx2 {
void conv_site(const float* in, const ConvParams& p, int oy, int ox, float* out);
void maxpool_site(const float* in, const PoolParams& p, int oy, int ox, float* out);
void relu(const float* in, float* out, std::size_t n);
}  // namespace avx2
#endif

}  // namespace evdet::kernels
