#pragma once

#include <array>

#include "trackanno/core/geometry.hpp"

namespace trackanno::motion {

using Vec2 = std::array<double, 2>;
/// Row-major 2x2.
using Mat2 = std::array<double, 4>;

/// Constant-velocity model of one image axis with a camera-motion input
/// feeding position:
///   x' = F x + B u + w,   y = H x + v
///   F = [1 t; 0 1], B = [1; 0], H = [1 0]
///   Theta = [t^3/3 t^2/2; t^2/2 t] * sigma_w^2,  R = sigma_v^2
struct KalmanParams {
  double t = 1.0;
  double sigma_w_sq = 0.005;
  double sigma_v_sq = 2.25;

  Mat2 transition() const { return {1.0, t, 0.0, 1.0}; }
  Vec2 input() const { return {1.0, 0.0}; }
  Mat2 process_cov() const {
    return {t * t * t / 3.0 * sigma_w_sq, t * t / 2.0 * sigma_w_sq, t * t / 2.0 * sigma_w_sq, t * sigma_w_sq};
  }
  double measurement_var() const { return sigma_v_sq; }
};

/// Position (pixels) and velocity (pixels/frame) with covariance.
struct AxisState {
  Vec2 x{0.0, 0.0};
  Mat2 P{0.0, 0.0, 0.0, 0.0};

  double position() const { return x[0]; }
  double velocity() const { return x[1]; }
};

/// Throws NumericError on non-finite state or input.
AxisState predict(const AxisState& s, const KalmanParams& p, double u);
/// Throws NumericError on non-finite state or measurement.
AxisState update(const AxisState& s, const KalmanParams& p, double y);
/// S = H P H^T + R
double innovation_variance(const AxisState& s, const KalmanParams& p);

/// Camera translation between frame k and k+1: a static scene point at p in
/// frame k appears at p + (du, dv) in frame k+1.
struct CameraMotion {
  double du = 0.0;
  double dv = 0.0;
  bool degenerate = false;

  friend bool operator==(const CameraMotion&, const CameraMotion&) = default;
};

/// Independent horizontal and vertical filters over the box center.
struct TrajectoryState {
  AxisState horizontal;
  AxisState vertical;

  Point position() const { return {horizontal.position(), vertical.position()}; }

  /// Birth state: position at `center`, zero velocity, P = diag(R, initial_velocity_var).
  static TrajectoryState born_at(Point center, const KalmanParams& p, double initial_velocity_var = 100.0);
};

TrajectoryState predict(const TrajectoryState& s, const KalmanParams& p, const CameraMotion& u);
TrajectoryState update(const TrajectoryState& s, const KalmanParams& p, Point measurement);

/// Sum over both axes of innovation^2 / S.
double gate_distance_sq(const TrajectoryState& s, const KalmanParams& p, Point pos);

/// True iff gate_distance_sq(s, p, pos) <= gamma. `s` is the predicted state.
bool gate_contains(const TrajectoryState& s, const KalmanParams& p, Point pos, double gamma);

}  // namespace trackanno::motion
