#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dense_kalman.hpp"
#include "test_support.hpp"
#include "trackanno/motion/kalman.hpp"
#include "trackanno/motion/motion_cache.hpp"
#include "trackanno/motion/phase_correlation.hpp"
#include "trackanno/synth/scenario.hpp"

using namespace trackanno;
using namespace trackanno::motion;
using trackanno::testing::DenseAxis;

namespace {

Image noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng() & 0xff);
  return Image::from_gray(w, h, std::move(px));
}

// b(x + dx, y + dy) = a(x, y), wrapping.
Image circular_shift(const Image& a, int dx, int dy) {
  std::vector<std::uint8_t> px(a.gray.size());
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      const int tx = ((x + dx) % a.width + a.width) % a.width;
      const int ty = ((y + dy) % a.height + a.height) % a.height;
      px[static_cast<std::size_t>(ty) * a.width + tx] = a.gray_at(x, y);
    }
  return Image::from_gray(a.width, a.height, std::move(px));
}

}  // namespace

TEST(Kalman, PredictAppliesInput) {
  KalmanParams p;
  AxisState s;
  s.x = {10.0, 2.0};
  const AxisState out = predict(s, p, 3.0);
  EXPECT_DOUBLE_EQ(out.position(), 15.0);
  EXPECT_DOUBLE_EQ(out.velocity(), 2.0);
}

TEST(Kalman, ProcessNoiseFromZeroCovariance) {
  KalmanParams p;
  const AxisState out = predict(AxisState{}, p, 0.0);
  EXPECT_NEAR(out.P[0], 0.005 / 3.0, 1e-15);
  EXPECT_NEAR(out.P[1], 0.0025, 1e-15);
  EXPECT_NEAR(out.P[2], 0.0025, 1e-15);
  EXPECT_NEAR(out.P[3], 0.005, 1e-15);
  EXPECT_NEAR(out.P[0], 0.001667, 1e-6);
}

TEST(Kalman, ProcessCovarianceAtUnitStep) {
  const Mat2 q = KalmanParams{}.process_cov();
  EXPECT_EQ(q[0], 1.0 / 3.0 * 0.005);
  EXPECT_EQ(q[1], 0.5 * 0.005);
  EXPECT_EQ(q[2], 0.5 * 0.005);
  EXPECT_EQ(q[3], 0.005);
}

TEST(Kalman, PosteriorVarianceScalarGain) {
  KalmanParams p;
  AxisState s;
  s.P = {100.0, 0.0, 0.0, 1.0};
  const AxisState out = update(s, p, 4.0);
  EXPECT_NEAR(out.P[0], 100.0 * 2.25 / 102.25, 1e-12);
  EXPECT_NEAR(out.P[0], 2.2005, 1e-4);
}

TEST(Kalman, ZeroInnovationKeepsPosition) {
  KalmanParams p;
  AxisState s;
  s.x = {7.0, 1.0};
  s.P = {5.0, 1.0, 1.0, 2.0};
  const AxisState out = update(s, p, 7.0);
  EXPECT_DOUBLE_EQ(out.position(), 7.0);
  EXPECT_DOUBLE_EQ(out.velocity(), 1.0);
  EXPECT_LT(out.P[0], s.P[0]);
}

TEST(Kalman, MatchesDenseOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5, 5), y(-50, 50);
  KalmanParams p;
  AxisState s;
  s.P = {p.sigma_v_sq, 0.0, 0.0, 100.0};
  DenseAxis d(p.t, p.sigma_w_sq, p.sigma_v_sq);
  d.P = trackanno::testing::Dense(2, 2, {p.sigma_v_sq, 0, 0, 100});
  for (int k = 0; k < 1000; ++k) {
    const double uk = u(rng);
    s = predict(s, p, uk);
    d.predict(uk);
    if (rng() % 4 != 0) {
      const double yk = s.position() + y(rng) * 0.1;
      s = update(s, p, yk);
      d.update(yk);
    }
    ASSERT_NEAR(s.x[0], d.x(0, 0), 1e-9) << k;
    ASSERT_NEAR(s.x[1], d.x(1, 0), 1e-9) << k;
    for (int i = 0; i < 4; ++i) ASSERT_NEAR(s.P[i], d.P.v[i], 1e-9) << k;
  }
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> y(-1000, 1000);
  KalmanParams p;
  AxisState s;
  s.P = {p.sigma_v_sq, 0.0, 0.0, 100.0};
  for (int k = 0; k < 5000; ++k) {
    s = predict(s, p, 0.0);
    if (k % 3) s = update(s, p, y(rng));
    EXPECT_DOUBLE_EQ(s.P[1], s.P[2]);
    EXPECT_GT(s.P[0], 0.0);
    EXPECT_GT(s.P[3], 0.0);
    EXPECT_GE(s.P[0] * s.P[3] - s.P[1] * s.P[2], -1e-12);
  }
}

TEST(Kalman, NonFiniteInputIsNumericError) {
  KalmanParams p;
  EXPECT_THROW(predict(AxisState{}, p, std::numeric_limits<double>::quiet_NaN()), NumericError);
  EXPECT_THROW(update(AxisState{}, p, std::numeric_limits<double>::infinity()), NumericError);
}

TEST(Gate, PredictedPositionAlwaysInside) {
  KalmanParams p;
  const auto s = TrajectoryState::born_at({50, 60}, p);
  EXPECT_TRUE(gate_contains(s, p, {50, 60}, 1e-9));
}

TEST(Gate, QuadraticFormBoundary) {
  // S = P00 + R = 4 on both axes.
  KalmanParams p;
  TrajectoryState s;
  s.horizontal.P = {4.0 - p.sigma_v_sq, 0, 0, 1};
  s.vertical.P = {4.0 - p.sigma_v_sq, 0, 0, 1};
  EXPECT_DOUBLE_EQ(innovation_variance(s.horizontal, p), 4.0);
  EXPECT_NEAR(gate_distance_sq(s, p, {6, 0}), 9.0, 1e-12);
  EXPECT_TRUE(gate_contains(s, p, {6, 0}, 9.21));
  EXPECT_NEAR(gate_distance_sq(s, p, {8, 0}), 16.0, 1e-12);
  EXPECT_FALSE(gate_contains(s, p, {8, 0}, 9.21));
}

TEST(Trajectory, BirthState) {
  KalmanParams p;
  const auto s = TrajectoryState::born_at({3, 4}, p, 100.0);
  EXPECT_EQ(s.position(), (Point{3, 4}));
  EXPECT_EQ(s.horizontal.P, (Mat2{p.sigma_v_sq, 0, 0, 100.0}));
  EXPECT_EQ(s.vertical.velocity(), 0.0);
}

TEST(Trajectory, CameraMotionShiftsBothAxes) {
  KalmanParams p;
  const auto s = predict(TrajectoryState::born_at({3, 4}, p), p, CameraMotion{2, -1});
  EXPECT_EQ(s.position(), (Point{5, 3}));
}

TEST(PhaseCorrelation, IdenticalFramesGiveZero) {
  const Image a = noise_image(128, 96, 1);
  const auto m = estimate_camera_motion(a, a);
  EXPECT_EQ(m.du, 0.0);
  EXPECT_EQ(m.dv, 0.0);
}

TEST(PhaseCorrelation, RecoversCircularShift) {
  const Image a = noise_image(128, 128, 2);
  const auto m = estimate_camera_motion(a, circular_shift(a, 5, -3));
  EXPECT_EQ(m.du, 5.0);
  EXPECT_EQ(m.dv, -3.0);
  EXPECT_FALSE(m.degenerate);
}

TEST(PhaseCorrelation, AntisymmetricInArguments) {
  const Image a = noise_image(96, 80, 3);
  const Image b = circular_shift(a, -7, 11);
  const auto ab = estimate_camera_motion(a, b);
  const auto ba = estimate_camera_motion(b, a);
  EXPECT_EQ(ab.du, -ba.du);
  EXPECT_EQ(ab.dv, -ba.dv);
}

TEST(PhaseCorrelation, ConstantFrameIsDegenerate) {
  const Image flat = Image::from_gray(64, 64, std::vector<std::uint8_t>(64 * 64, 90));
  const auto m = estimate_camera_motion(flat, flat);
  EXPECT_TRUE(m.degenerate);
  EXPECT_EQ(m.du, 0.0);
}

TEST(PhaseCorrelation, SizeMismatchThrows) {
  PhaseCorrelator pc(32, 32);
  EXPECT_THROW(pc.estimate(noise_image(32, 32, 1), noise_image(32, 16, 1)), InvalidArgument);
}

TEST(PhaseCorrelation, MatchesSyntheticPan) {
  synth::SceneConfig cfg;
  cfg.frames = 40;
  cfg.pan_period = 30;
  const synth::Scene scene(cfg);
  int exact = 0;
  for (int f = 0; f + 1 < cfg.frames; ++f) {
    const auto truth = scene.camera_motion(f);
    const auto m = estimate_camera_motion(scene.render(f), scene.render(f + 1));
    exact += (m.du == truth.du && m.dv == truth.dv) ? 1 : 0;
  }
  EXPECT_GE(exact, cfg.frames - 2);
}

TEST(PhaseCorrelation, RaisedCosineWindowShape) {
  const auto w = raised_cosine_window(8, 4);
  ASSERT_EQ(w.size(), 32u);
  for (double v : w) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_DOUBLE_EQ(w[0], w[7]);
}

TEST(MotionCache, RoundTrip) {
  trackanno::testing::TempDir dir;
  MotionCache c;
  c.put("v", 0, {1, -2, false});
  c.put("v", 5, {0, 0, true});
  c.put("w", 1, {-3, 4, false});
  c.save(dir / "m.csv");
  const auto back = MotionCache::load(dir / "m.csv");
  EXPECT_EQ(back.size(), 3u);
  EXPECT_EQ(*back.get("v", 0), (CameraMotion{1, -2, false}));
  EXPECT_TRUE(back.get("v", 5)->degenerate);
  EXPECT_FALSE(back.get("v", 1));
  EXPECT_EQ(MotionCache::load(dir / "none.csv").size(), 0u);
}
