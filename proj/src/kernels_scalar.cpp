#include <cmath>

#include "evdet/kernels.hpp"

namespace evdet::kernels::scalar {

void conv_site(const float* in, const ConvParams& p, int oy, int ox, float* out) {
  for (int co = 0; co < p.cout; ++co) out[co] = p.bias[co];
  for (int ky = 0; ky < p.k; ++ky) {
    const int iy = oy * p.stride - p.pad + ky;
    if (iy < 0 || iy >= p.in_h) continue;
    for (int kx = 0; kx < p.k; ++kx) {
      const int ix = ox * p.stride - p.pad + kx;
      if (ix < 0 || ix >= p.in_w) continue;
      const float* src = in + (static_cast<std::size_t>(iy) * p.in_w + ix) * p.cin;
      const float* w = p.weights + static_cast<std::size_t>(ky * p.k + kx) * p.cin * p.cout;
      for (int ci = 0; ci < p.cin; ++ci) {
        const float a = src[ci];
        const float* row = w + static_cast<std::size_t>(ci) * p.cout;
        for (int co = 0; co < p.cout; ++co) out[co] = std::fma(a, row[co], out[co]);
      }
    }
  }
}

void maxpool_site(const float* in, const PoolParams& p, int oy, int ox, float* out) {
  const float* first = in + (static_cast<std::size_t>(oy * p.stride) * p.in_w + ox * p.stride) * p.c;
  for (int c = 0; c < p.c; ++c) out[c] = first[c];
  for (int ky = 0; ky < p.k; ++ky) {
    for (int kx = 0; kx < p.k; ++kx) {
      if (ky == 0 && kx == 0) continue;
      const float* src = in + (static_cast<std::size_t>(oy * p.stride + ky) * p.in_w + ox * p.stride + kx) * p.c;
      // Same operand order as _mm256_max_ps(out, src).
      for (int c = 0; c < p.c; ++c) out[c] = out[c] > src[c] ? out[c] : src[c];
    }
  }
}

void relu(const float* in, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

}  // namespace evdet::kernels::scalar
