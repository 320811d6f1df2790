#include "trackanno/visual/template.hpp"

#include <algorithm>
#include <cmath>

#include "trackanno/core/error.hpp"
#include "trackanno/simd/kernels.hpp"

namespace trackanno::visual {

std::vector<float> resample_gray(const Image& frame, const BoundingBox& box, int size) {
  if (!box.valid()) throw InvalidArgument("resample: invalid box");
  const auto region = intersect(box, frame.bounds());
  if (!region) throw InvalidArgument("resample: box lies outside the frame");
  const double x0 = region->x, y0 = region->y;
  const double sx = region->w / size, sy = region->h / size;
  const int max_x = frame.width - 1, max_y = frame.height - 1;

  std::vector<float> out(static_cast<std::size_t>(size) * size);
  // Sample at output pixel centres, mapped into source pixel-centre coordinates.
  std::vector<int> xi0(size), xi1(size);
  std::vector<double> fx(size);
  for (int j = 0; j < size; ++j) {
    double u = x0 + (j + 0.5) * sx - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(max_x));
    xi0[j] = static_cast<int>(std::floor(u));
    xi1[j] = std::min(xi0[j] + 1, max_x);
    fx[j] = u - xi0[j];
  }
  for (int i = 0; i < size; ++i) {
    double v = y0 + (i + 0.5) * sy - 0.5;
    v = std::clamp(v, 0.0, static_cast<double>(max_y));
    const int y_lo = static_cast<int>(std::floor(v));
    const int y_hi = std::min(y_lo + 1, max_y);
    const double fy = v - y_lo;
    const auto* row0 = frame.gray.data() + static_cast<std::size_t>(y_lo) * frame.width;
    const auto* row1 = frame.gray.data() + static_cast<std::size_t>(y_hi) * frame.width;
    for (int j = 0; j < size; ++j) {
      const double top = row0[xi0[j]] + fx[j] * (row0[xi1[j]] - row0[xi0[j]]);
      const double bot = row1[xi0[j]] + fx[j] * (row1[xi1[j]] - row1[xi0[j]]);
      out[static_cast<std::size_t>(i) * size + j] = static_cast<float>(top + fy * (bot - top));
    }
  }
  return out;
}

Template make_template(std::vector<float> pixels, const BoundingBox& source_box, int source_frame) {
  Template t;
  t.source_box = source_box;
  t.source_frame = source_frame;
  double sum = 0.0, sum_sq = 0.0;
  simd::moments(pixels, sum, sum_sq);
  const double n = static_cast<double>(pixels.size());
  const double mean = sum / n;
  const double ss = sum_sq - sum * mean;  // sum of squared deviations
  // Near-constant patches (quantisation noise only) carry no appearance.
  if (!(ss > 1e-6 * n)) {
    t.degenerate = true;
  } else {
    t.normalized = pixels;
    simd::active().center_scale_f32(t.normalized.data(), t.normalized.size(), static_cast<float>(mean),
                                    static_cast<float>(1.0 / std::sqrt(ss)));
  }
  t.pixels = std::move(pixels);
  return t;
}

Template extract_template(const Image& frame, const BoundingBox& box, int source_frame) {
  return make_template(resample_gray(frame, box), box, source_frame);
}

MatchScore correlation(const Template& a, const Template& b) {
  if (a.degenerate || b.degenerate || a.normalized.empty() || b.normalized.empty()) return {0.0};
  return {std::clamp(simd::dot(a.normalized, b.normalized), -1.0, 1.0)};
}

MatchScore correlation(const Template& t, const Image& frame, const BoundingBox& box) {
  return correlation(t, extract_template(frame, box));
}

std::optional<Match> best_match(const Template& h, std::span<const Template> candidates,
                                std::span<const Detection> detections) {
  if (candidates.size() != detections.size()) throw InvalidArgument("best_match: candidate/detection count mismatch");
  std::optional<Match> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const MatchScore s = correlation(h, candidates[i]);
    if (!best) {
      best = Match{i, s};
      continue;
    }
    const auto& cur = detections[best->index];
    const auto& cand = detections[i];
    bool better = s.value > best->score.value;
    if (s.value == best->score.value) {
      if (cand.objectness != cur.objectness)
        better = cand.objectness > cur.objectness;
      else
        better = canonical_less(cand, cur);
    }
    if (better) best = Match{i, s};
  }
  return best;
}

std::optional<Match> best_match(const Template& h, std::span<const Detection> detections, const Image& frame) {
  std::vector<Template> candidates;
  candidates.reserve(detections.size());
  for (const auto& d : detections) candidates.push_back(extract_template(frame, d.box, d.frame_index));
  return best_match(h, candidates, detections);
}

}  // namespace trackanno::visual
