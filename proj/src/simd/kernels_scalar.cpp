#include <cmath>

#include "trackanno/simd/kernels.hpp"

namespace trackanno::simd {
namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

void moments_scalar(const float* a, std::size_t n, double* sum, double* sum_sq) {
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = a[i];
    s += v;
    ss += v * v;
  }
  *sum = s;
  *sum_sq = ss;
}

void center_scale_scalar(float* a, std::size_t n, float offset, float scale) {
  for (std::size_t i = 0; i < n; ++i) a[i] = (a[i] - offset) * scale;
}

void window_u8_scalar(const std::uint8_t* src, const double* window, double mean, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (static_cast<double>(src[i]) - mean) * window[i];
}

void cross_power_scalar(const std::complex<double>* a, const std::complex<double>* b, std::complex<double>* out,
                        std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = b[i].real() * a[i].real() + b[i].imag() * a[i].imag();
    const double im = b[i].imag() * a[i].real() - b[i].real() * a[i].imag();
    const double mag = std::sqrt(re * re + im * im);
    out[i] = mag > 1e-12 ? std::complex<double>(re / mag, im / mag) : std::complex<double>(0.0, 0.0);
  }
}

}  // namespace

namespace detail {
const Kernels kScalarKernels{Isa::Scalar,     dot_scalar,       moments_scalar,
                             center_scale_scalar, window_u8_scalar, cross_power_scalar};
}  // namespace detail

}  // namespace trackanno::simd
