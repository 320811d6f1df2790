#include "trackanno/motion/kalman.hpp"

#include <cmath>

#include "trackanno/core/error.hpp"

namespace trackanno::motion {
namespace {

bool finite(const AxisState& s) {
  for (double v : s.x)
    if (!std::isfinite(v)) return false;
  for (double v : s.P)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

AxisState predict(const AxisState& s, const KalmanParams& p, double u) {
  if (!finite(s) || !std::isfinite(u)) throw NumericError("kalman predict: non-finite input");
  const double t = p.t;
  const Mat2 Q = p.process_cov();
  AxisState out;
  out.x = {s.x[0] + t * s.x[1] + u, s.x[1]};
  // F P F^T with F = [1 t; 0 1]
  const double p00 = s.P[0], p01 = s.P[1], p10 = s.P[2], p11 = s.P[3];
  const double a00 = p00 + t * (p10 + p01) + t * t * p11;
  const double a01 = p01 + t * p11;
  const double a10 = p10 + t * p11;
  const double a11 = p11;
  out.P = {a00 + Q[0], a01 + Q[1], a10 + Q[2], a11 + Q[3]};
  return out;
}

double innovation_variance(const AxisState& s, const KalmanParams& p) { return s.P[0] + p.measurement_var(); }

AxisState update(const AxisState& s, const KalmanParams& p, double y) {
  if (!finite(s) || !std::isfinite(y)) throw NumericError("kalman update: non-finite input");
  const double S = innovation_variance(s, p);
  if (!(S > 0.0)) throw NumericError("kalman update: non-positive innovation variance");
  const double k0 = s.P[0] / S;
  const double k1 = s.P[2] / S;
  const double r = y - s.x[0];
  AxisState out;
  out.x = {s.x[0] + k0 * r, s.x[1] + k1 * r};
  // Joseph form: (I - K H) P (I - K H)^T + K R K^T keeps P symmetric PSD.
  const double m00 = 1.0 - k0, m10 = -k1;  // I - K H = [m00 0; m10 1]
  const double p00 = s.P[0], p01 = s.P[1], p10 = s.P[2], p11 = s.P[3];
  // A = (I - K H) P
  const double a00 = m00 * p00, a01 = m00 * p01;
  const double a10 = m10 * p00 + p10, a11 = m10 * p01 + p11;
  // A (I - K H)^T
  const double b00 = a00 * m00, b01 = a00 * m10 + a01;
  const double b10 = a10 * m00, b11 = a10 * m10 + a11;
  const double R = p.measurement_var();
  out.P = {b00 + k0 * k0 * R, b01 + k0 * k1 * R, b10 + k1 * k0 * R, b11 + k1 * k1 * R};
  return out;
}

TrajectoryState TrajectoryState::born_at(Point center, const KalmanParams& p, double initial_velocity_var) {
  TrajectoryState s;
  const double R = p.measurement_var();
  s.horizontal = {{center.x, 0.0}, {R, 0.0, 0.0, initial_velocity_var}};
  s.vertical = {{center.y, 0.0}, {R, 0.0, 0.0, initial_velocity_var}};
  return s;
}

TrajectoryState predict(const TrajectoryState& s, const KalmanParams& p, const CameraMotion& u) {
  return {predict(s.horizontal, p, u.du), predict(s.vertical, p, u.dv)};
}

TrajectoryState update(const TrajectoryState& s, const KalmanParams& p, Point m) {
  return {update(s.horizontal, p, m.x), update(s.vertical, p, m.y)};
}

double gate_distance_sq(const TrajectoryState& s, const KalmanParams& p, Point pos) {
  const double rx = pos.x - s.horizontal.position();
  const double ry = pos.y - s.vertical.position();
  return rx * rx / innovation_variance(s.horizontal, p) + ry * ry / innovation_variance(s.vertical, p);
}

bool gate_contains(const TrajectoryState& s, const KalmanParams& p, Point pos, double gamma) {
  return gate_distance_sq(s, p, pos) <= gamma;
}

}  // namespace trackanno::motion
