#pragma once

// Data-parallel inner loops of the visual and motion models.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant compiled in its own translation unit. The active table is chosen
// once at first use from CPUID; TRACKANNO_ISA=scalar forces the reference
// path. Variants agree to within floating-point reassociation error; tests
// pin the bound per kernel.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace trackanno::simd {

enum class Isa { Scalar, Avx2 };

struct Kernels {
  Isa isa;
  // sum(a[i] * b[i]) accumulated in double.
  double (*dot_f32)(const float* a, const float* b, std::size_t n);
  // sum(a[i]) and sum(a[i]^2) accumulated in double.
  void (*moments_f32)(const float* a, std::size_t n, double* sum, double* sum_sq);
  // a[i] = (a[i] - offset) * scale, in place.
  void (*center_scale_f32)(float* a, std::size_t n, float offset, float scale);
  // out[i] = (src[i] - mean) * window[i]
  void (*window_u8)(const std::uint8_t* src, const double* window, double mean, double* out, std::size_t n);
  // out[i] = b[i] * conj(a[i]) / |b[i] * conj(a[i])|, or 0 below magnitude 1e-12.
  void (*cross_power)(const std::complex<double>* a, const std::complex<double>* b, std::complex<double>* out,
                      std::size_t n);
};

const char* to_string(Isa isa);
bool isa_supported(Isa isa);

/// Kernel table for a specific ISA. Throws InvalidArgument when unsupported.
const Kernels& kernels_for(Isa isa);

/// Kernel table in use.
const Kernels& active();

/// Override the runtime choice (tests, benchmarks). Not thread-safe with
/// respect to concurrent kernel calls; call before spawning workers.
void select_isa(Isa isa);

// Span conveniences over the active table.
double dot(std::span<const float> a, std::span<const float> b);
void moments(std::span<const float> a, double& sum, double& sum_sq);

namespace detail {
extern const Kernels kScalarKernels;
#if defined(TRACKANNO_HAVE_AVX2)
extern const Kernels kAvx2Kernels;
#endif
}  // namespace detail

}  // namespace trackanno::simd
