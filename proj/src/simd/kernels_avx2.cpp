// Compiled with -mavx2 -mfma. Only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "trackanno/simd/kernels.hpp"

namespace trackanno::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  // 8 floats per iteration, widened to two 4-lane double accumulators.
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)), _mm256_cvtps_pd(_mm256_castps256_ps128(vb)),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                           _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

void moments_avx2(const float* a, std::size_t n, double* sum, double* sum_sq) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d q0 = _mm256_setzero_pd(), q1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(a + i);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    s0 = _mm256_add_pd(s0, lo);
    s1 = _mm256_add_pd(s1, hi);
    q0 = _mm256_fmadd_pd(lo, lo, q0);
    q1 = _mm256_fmadd_pd(hi, hi, q1);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  double q = hsum(_mm256_add_pd(q0, q1));
  for (; i < n; ++i) {
    const double v = a[i];
    s += v;
    q += v * v;
  }
  *sum = s;
  *sum_sq = q;
}

void center_scale_avx2(float* a, std::size_t n, float offset, float scale) {
  const __m256 vo = _mm256_set1_ps(offset);
  const __m256 vs = _mm256_set1_ps(scale);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(a + i, _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(a + i), vo), vs));
  }
  for (; i < n; ++i) a[i] = (a[i] - offset) * scale;
}

void window_u8_avx2(const std::uint8_t* src, const double* window, double mean, double* out, std::size_t n) {
  const __m256d vm = _mm256_set1_pd(mean);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    std::uint32_t packed;
    __builtin_memcpy(&packed, src + i, 4);
    const __m128i bytes = _mm_cvtsi32_si128(static_cast<int>(packed));
    const __m256d px = _mm256_cvtepi32_pd(_mm_cvtepu8_epi32(bytes));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_sub_pd(px, vm), _mm256_loadu_pd(window + i)));
  }
  for (; i < n; ++i) out[i] = (static_cast<double>(src[i]) - mean) * window[i];
}

void cross_power_avx2(const std::complex<double>* a, const std::complex<double>* b, std::complex<double>* out,
                      std::size_t n) {
  const auto* pa = reinterpret_cast<const double*>(a);
  const auto* pb = reinterpret_cast<const double*>(b);
  auto* po = reinterpret_cast<double*>(out);
  const __m256d eps = _mm256_set1_pd(1e-12);
  std::size_t i = 0;
  // Two complex values per 256-bit register: [re0 im0 re1 im1].
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    // b * conj(a): re = br*ar + bi*ai, im = bi*ar - br*ai
    const __m256d a_re = _mm256_movedup_pd(va);               // ar ar
    const __m256d a_im = _mm256_permute_pd(va, 0b1111);       // ai ai
    const __m256d b_sw = _mm256_permute_pd(vb, 0b0101);       // bi br
    const __m256d t1 = _mm256_mul_pd(vb, a_re);               // br*ar, bi*ar
    const __m256d t2 = _mm256_mul_pd(b_sw, a_im);             // bi*ai, br*ai
    // addsub gives (t1 - t2, t1 + t2); we want (t1 + t2, t1 - t2): negate t2 then addsub.
    const __m256d prod = _mm256_addsub_pd(t1, _mm256_sub_pd(_mm256_setzero_pd(), t2));
    const __m256d sq = _mm256_mul_pd(prod, prod);
    const __m256d mag = _mm256_sqrt_pd(_mm256_hadd_pd(sq, sq));  // |.| duplicated per pair
    const __m256d keep = _mm256_cmp_pd(mag, eps, _CMP_GT_OQ);
    const __m256d q = _mm256_div_pd(prod, mag);
    _mm256_storeu_pd(po + 2 * i, _mm256_and_pd(q, keep));
  }
  for (; i < n; ++i) {
    const double re = b[i].real() * a[i].real() + b[i].imag() * a[i].imag();
    const double im = b[i].imag() * a[i].real() - b[i].real() * a[i].imag();
    const double mag = std::sqrt(re * re + im * im);
    out[i] = mag > 1e-12 ? std::complex<double>(re / mag, im / mag) : std::complex<double>(0.0, 0.0);
  }
}

}  // namespace

namespace detail {
const Kernels kAvx2Kernels{Isa::Avx2,        dot_avx2,       moments_avx2,
                           center_scale_avx2, window_u8_avx2, cross_power_avx2};
}  // namespace detail

}  // namespace trackanno::simd
