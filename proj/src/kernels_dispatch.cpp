#include <atomic>
#include <cstdlib>
#include <string>

#include "evdet/error.hpp"
#include "evdet/kernels.hpp"

namespace evdet::kernels {
namespace {

constexpr KernelTable kScalar{scalar::conv_site, scalar::maxpool_site, scalar::relu};
#if defined(EVDET_HAVE_AVX2)
constexpr KernelTable kAvx2{avx2::conv_site, avx2::maxpool_site, avx2::relu};
#endif

Isa detect() {
  if (const char* env = std::getenv("EVDET_ISA")) {
    const std::string want = env;
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(EVDET_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) throw Error("ISA '" + std::string(isa_name(isa)) + "' is not supported here");
  current().store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
#if defined(EVDET_HAVE_AVX2)
  if (isa == Isa::avx2) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

}  // namespace evdet::kernels
