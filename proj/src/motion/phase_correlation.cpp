#include "trackanno/motion/phase_correlation.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "trackanno/core/error.hpp"
#include "trackanno/simd/kernels.hpp"

namespace trackanno::motion {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
struct FftwFree {
  void operator()(T* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T, FftwFree<T>>;

double plane_mean(const std::vector<std::uint8_t>& px, bool& constant) {
  constant = true;
  long long sum = 0;
  const auto first = px.empty() ? 0 : px.front();
  for (auto v : px) {
    sum += v;
    constant = constant && v == first;
  }
  return px.empty() ? 0.0 : static_cast<double>(sum) / static_cast<double>(px.size());
}

}  // namespace

std::vector<double> raised_cosine_window(int width, int height) {
  auto axis = [](int n) {
    std::vector<double> w(static_cast<std::size_t>(n), 1.0);
    if (n > 1)
      for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    return w;
  };
  const auto wx = axis(width);
  const auto wy = axis(height);
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out[static_cast<std::size_t>(y) * width + x] = wy[y] * wx[x];
  return out;
}

struct PhaseCorrelator::Impl {
  int width;
  int height;
  int spectrum_cols;  // width / 2 + 1
  std::vector<double> window;
  FftwBuffer<double> real_a, real_b;
  FftwBuffer<fftw_complex> spec_a, spec_b, cross;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  Impl(int w, int h) : width(w), height(h), spectrum_cols(w / 2 + 1), window(raised_cosine_window(w, h)) {
    const std::size_t n_real = static_cast<std::size_t>(w) * h;
    const std::size_t n_spec = static_cast<std::size_t>(h) * spectrum_cols;
    real_a.reset(fftw_alloc_real(n_real));
    real_b.reset(fftw_alloc_real(n_real));
    spec_a.reset(fftw_alloc_complex(n_spec));
    spec_b.reset(fftw_alloc_complex(n_spec));
    cross.reset(fftw_alloc_complex(n_spec));
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_r2c_2d(h, w, real_a.get(), spec_a.get(), FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_2d(h, w, cross.get(), real_a.get(), FFTW_ESTIMATE);
    if (!forward || !inverse) throw NumericError("phase correlation: FFT planning failed");
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

PhaseCorrelator::PhaseCorrelator(int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("PhaseCorrelator: empty frame size");
  impl_ = std::make_unique<Impl>(width, height);
}

PhaseCorrelator::~PhaseCorrelator() = default;
PhaseCorrelator::PhaseCorrelator(PhaseCorrelator&&) noexcept = default;
PhaseCorrelator& PhaseCorrelator::operator=(PhaseCorrelator&&) noexcept = default;

int PhaseCorrelator::width() const { return impl_->width; }
int PhaseCorrelator::height() const { return impl_->height; }

CameraMotion PhaseCorrelator::estimate(const Image& a, const Image& b) {
  auto& m = *impl_;
  if (a.width != m.width || a.height != m.height || b.width != m.width || b.height != m.height)
    throw InvalidArgument("phase correlation: frame size mismatch");

  bool const_a = false, const_b = false;
  const double mean_a = plane_mean(a.gray, const_a);
  const double mean_b = plane_mean(b.gray, const_b);
  if (const_a || const_b) return {0.0, 0.0, true};

  const auto& k = simd::active();
  const std::size_t n = a.gray.size();
  k.window_u8(a.gray.data(), m.window.data(), mean_a, m.real_a.get(), n);
  k.window_u8(b.gray.data(), m.window.data(), mean_b, m.real_b.get(), n);
  fftw_execute_dft_r2c(m.forward, m.real_a.get(), m.spec_a.get());
  fftw_execute_dft_r2c(m.forward, m.real_b.get(), m.spec_b.get());

  const std::size_t n_spec = static_cast<std::size_t>(m.height) * m.spectrum_cols;
  k.cross_power(reinterpret_cast<const std::complex<double>*>(m.spec_a.get()),
                reinterpret_cast<const std::complex<double>*>(m.spec_b.get()),
                reinterpret_cast<std::complex<double>*>(m.cross.get()), n_spec);
  fftw_execute_dft_c2r(m.inverse, m.cross.get(), m.real_a.get());

  const double* surface = m.real_a.get();
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (surface[i] > surface[best]) best = i;
  if (!std::isfinite(surface[best])) throw NumericError("phase correlation: non-finite correlation surface");

  int dx = static_cast<int>(best % static_cast<std::size_t>(m.width));
  int dy = static_cast<int>(best / static_cast<std::size_t>(m.width));
  if (dx > m.width / 2) dx -= m.width;
  if (dy > m.height / 2) dy -= m.height;
  return {static_cast<double>(dx), static_cast<double>(dy), false};
}

CameraMotion estimate_camera_motion(const Image& frame_a, const Image& frame_b) {
  if (frame_a.width != frame_b.width || frame_a.height != frame_b.height)
    throw InvalidArgument("estimate_camera_motion: frame size mismatch");
  thread_local std::unique_ptr<PhaseCorrelator> cached;
  if (!cached || cached->width() != frame_a.width || cached->height() != frame_a.height)
    cached = std::make_unique<PhaseCorrelator>(frame_a.width, frame_a.height);
  return cached->estimate(frame_a, frame_b);
}

}  // namespace trackanno::motion
