#pragma once

#include <memory>
#include <vector>

#include "trackanno/core/image.hpp"
#include "trackanno/motion/kalman.hpp"

namespace trackanno::motion {

/// Global translation between two equal-size frames by phase correlation.
///
/// Both grayscale planes are mean-removed and multiplied by a separable
/// raised-cosine window, transformed, and the normalised cross-power
/// spectrum is inverse-transformed. The integer argmax, mapped to signed
/// shifts, is the motion. FFT plans and buffers are owned per instance and
/// reused across calls, so one correlator per thread.
class PhaseCorrelator {
 public:
  PhaseCorrelator(int width, int height);
  ~PhaseCorrelator();
  PhaseCorrelator(const PhaseCorrelator&) = delete;
  PhaseCorrelator& operator=(const PhaseCorrelator&) = delete;
  PhaseCorrelator(PhaseCorrelator&&) noexcept;
  PhaseCorrelator& operator=(PhaseCorrelator&&) noexcept;

  int width() const;
  int height() const;

  /// Throws InvalidArgument on size mismatch. Constant input yields (0,0)
  /// with `degenerate` set.
  CameraMotion estimate(const Image& a, const Image& b);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience; reuses a thread-local correlator when sizes repeat.
CameraMotion estimate_camera_motion(const Image& frame_a, const Image& frame_b);

/// Separable raised-cosine window, row-major width*height.
std::vector<double> raised_cosine_window(int width, int height);

}  // namespace trackanno::motion
