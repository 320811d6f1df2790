#include <atomic>
#include <cstdlib>
#include <string>

#include "trackanno/core/error.hpp"
#include "trackanno/simd/kernels.hpp"

namespace trackanno::simd {

const char* to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(TRACKANNO_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const Kernels& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw InvalidArgument(std::string("ISA not supported on this host: ") + to_string(isa));
#if defined(TRACKANNO_HAVE_AVX2)
  if (isa == Isa::Avx2) return detail::kAvx2Kernels;
#endif
  return detail::kScalarKernels;
}

namespace {

const Kernels* pick_default() {
  if (const char* env = std::getenv("TRACKANNO_ISA"); env && std::string(env) == "scalar")
    return &detail::kScalarKernels;
  if (isa_supported(Isa::Avx2)) return &kernels_for(Isa::Avx2);
  return &detail::kScalarKernels;
}

std::atomic<const Kernels*>& slot() {
  static std::atomic<const Kernels*> s{pick_default()};
  return s;
}

}  // namespace

const Kernels& active() { return *slot().load(std::memory_order_relaxed); }

void select_isa(Isa isa) { slot().store(&kernels_for(isa), std::memory_order_relaxed); }

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  return active().dot_f32(a.data(), b.data(), a.size());
}

void moments(std::span<const float> a, double& sum, double& sum_sq) {
  active().moments_f32(a.data(), a.size(), &sum, &sum_sq);
}

}  // namespace trackanno::simd
