// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "evdet/kernels.hpp"

namespace evdet::kernels::avx2 {
namespace {

// Accumulates `blocks` 8-lane column blocks of output channels starting at co0.
template <int Blocks>
inline void conv_block(const float* in, const ConvParams& p, int oy, int ox, int co0, float* out) {
  __m256 acc[Blocks];
  for (int b = 0; b < Blocks; ++b) acc[b] = _mm256_loadu_ps(p.bias + co0 + 8 * b);
  for (int ky = 0; ky < p.k; ++ky) {
    const int iy = oy * p.stride - p.pad + ky;
    if (iy < 0 || iy >= p.in_h) continue;
    for (int kx = 0; kx < p.k; ++kx) {
      const int ix = ox * p.stride - p.pad + kx;
      if (ix < 0 || ix >= p.in_w) continue;
      const float* src = in + (static_cast<std::size_t>(iy) * p.in_w + ix) * p.cin;
      const float* w = p.weights + static_cast<std::size_t>(ky * p.k + kx) * p.cin * p.cout + co0;
      for (int ci = 0; ci < p.cin; ++ci) {
        const __m256 a = _mm256_broadcast_ss(src + ci);
        const float* row = w + static_cast<std::size_t>(ci) * p.cout;
        for (int b = 0; b < Blocks; ++b) acc[b] = _mm256_fmadd_ps(a, _mm256_loadu_ps(row + 8 * b), acc[b]);
      }
    }
  }
  for (int b = 0; b < Blocks; ++b) _mm256_storeu_ps(out + co0 + 8 * b, acc[b]);
}

// Channels past the last full 8-lane block, in the scalar kernel's order.
void conv_tail(const float* in, const ConvParams& p, int oy, int ox, int co0, float* out) {
  for (int co = co0; co < p.cout; ++co) out[co] = p.bias[co];
  for (int ky = 0; ky < p.k; ++ky) {
    const int iy = oy * p.stride - p.pad + ky;
    if (iy < 0 || iy >= p.in_h) continue;
    for (int kx = 0; kx < p.k; ++kx) {
      const int ix = ox * p.stride - p.pad + kx;
      if (ix < 0 || ix >= p.in_w) continue;
      const float* src = in + (static_cast<std::size_t>(iy) * p.in_w + ix) * p.cin;
      const float* w = p.weights + static_cast<std::size_t>(ky * p.k + kx) * p.cin * p.cout;
      for (int ci = 0; ci < p.cin; ++ci) {
        const float* row = w + static_cast<std::size_t>(ci) * p.cout;
        for (int co = co0; co < p.cout; ++co) out[co] = std::fma(src[ci], row[co], out[co]);
      }
    }
  }
}

}  // namespace

void conv_site(const float* in, const ConvParams& p, int oy, int ox, float* out) {
  int co = 0;
  for (; co + 32 <= p.cout; co += 32) conv_block<4>(in, p, oy, ox, co, out);
  for (; co + 8 <= p.cout; co += 8) conv_block<1>(in, p, oy, ox, co, out);
  if (co < p.cout) conv_tail(in, p, oy, ox, co, out);
}

void maxpool_site(const float* in, const PoolParams& p, int oy, int ox, float* out) {
  auto at = [&](int ky, int kx) {
    return in + (static_cast<std::size_t>(oy * p.stride + ky) * p.in_w + ox * p.stride + kx) * p.c;
  };
  int c = 0;
  for (; c + 8 <= p.c; c += 8) {
    __m256 m = _mm256_loadu_ps(at(0, 0) + c);
    for (int ky = 0; ky < p.k; ++ky) {
      for (int kx = 0; kx < p.k; ++kx) {
        if (ky == 0 && kx == 0) continue;
        m = _mm256_max_ps(m, _mm256_loadu_ps(at(ky, kx) + c));
      }
    }
    _mm256_storeu_ps(out + c, m);
  }
  for (; c < p.c; ++c) {
    float m = at(0, 0)[c];
    for (int ky = 0; ky < p.k; ++ky) {
      for (int kx = 0; kx < p.k; ++kx) {
        if (ky == 0 && kx == 0) continue;
        const float v = at(ky, kx)[c];
        m = m > v ? m : v;
      }
    }
    out[c] = m;
  }
}

void relu(const float* in, float* out, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(in + i), zero));
  for (; i < n; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

}  // namespace evdet::kernels::avx2
