#pragma once

// Textbook Kalman recursion over general dense matrices, written without
// reference to the library's 2x2 closed forms.

#include <cstddef>
#include <vector>

namespace trackanno::testing {

struct Dense {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;

  Dense(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  Dense(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), v(std::move(values)) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

  static Dense identity(std::size_t n) {
    Dense m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Dense operator*(const Dense& a, const Dense& b) {
  Dense out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline Dense operator+(Dense a, const Dense& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

inline Dense operator-(Dense a, const Dense& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] -= b.v[i];
  return a;
}

inline Dense operator*(double s, Dense a) {
  for (auto& x : a.v) x *= s;
  return a;
}

inline Dense transpose(const Dense& a) {
  Dense out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

/// Constant-velocity axis with camera input on position.
struct DenseAxis {
  Dense x{2, 1};
  Dense P{2, 2};
  Dense F{2, 2}, B{2, 1}, H{1, 2}, Q{2, 2}, R{1, 1};

  DenseAxis(double t, double sw2, double sv2) {
    F = Dense(2, 2, {1, t, 0, 1});
    B = Dense(2, 1, {1, 0});
    H = Dense(1, 2, {1, 0});
    Q = sw2 * Dense(2, 2, {t * t * t / 3, t * t / 2, t * t / 2, t});
    R = Dense(1, 1, {sv2});
  }

  void predict(double u) {
    x = F * x + u * B;
    P = F * P * transpose(F) + Q;
  }

  // Joseph form.
  void update(double y) {
    const Dense S = H * P * transpose(H) + R;
    const Dense K = (1.0 / S(0, 0)) * (P * transpose(H));
    const Dense innov(1, 1, {y - (H * x)(0, 0)});
    x = x + K * innov;
    const Dense IKH = Dense::identity(2) - K * H;
    P = IKH * P * transpose(IKH) + K * R * transpose(K);
  }
};

}  // namespace trackanno::testing
