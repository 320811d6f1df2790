#pragma once

#include <optional>
#include <span>
#include <vector>

#include "trackanno/core/image.hpp"
#include "trackanno/core/records.hpp"

namespace trackanno::visual {

inline constexpr int kTemplateSize = 64;
inline constexpr std::size_t kTemplatePixels = static_cast<std::size_t>(kTemplateSize) * kTemplateSize;

/// Raw-pixel appearance model: the detection crop (clipped to the frame)
/// resampled to 64x64 grayscale.
struct Template {
  std::vector<float> pixels;      // kTemplatePixels, gray levels in [0, 255]
  std::vector<float> normalized;  // zero mean, unit L2 norm; empty when degenerate
  BoundingBox source_box;
  int source_frame = -1;
  bool degenerate = false;
};

/// Bounded similarity in [-1, 1].
struct MatchScore {
  double value = 0.0;

  friend auto operator<=>(const MatchScore&, const MatchScore&) = default;
};

/// Bilinear resample of the box region (clipped to the frame) to a
/// size x size grayscale patch. Throws InvalidArgument when the box misses
/// the frame.
std::vector<float> resample_gray(const Image& frame, const BoundingBox& box, int size = kTemplateSize);

Template make_template(std::vector<float> pixels, const BoundingBox& source_box, int source_frame);
Template extract_template(const Image& frame, const BoundingBox& box, int source_frame = -1);

/// Zero-mean normalised cross-correlation; 0 if either side is degenerate.
MatchScore correlation(const Template& a, const Template& b);
MatchScore correlation(const Template& t, const Image& frame, const BoundingBox& box);

struct Match {
  std::size_t index = 0;  // into the candidate list
  MatchScore score;
};

/// Highest-correlation candidate. Ties go to higher objectness, then to the
/// canonical box order, so the result does not depend on list order.
std::optional<Match> best_match(const Template& h, std::span<const Template> candidates,
                                std::span<const Detection> detections);
std::optional<Match> best_match(const Template& h, std::span<const Detection> detections, const Image& frame);

}  // namespace trackanno::visual
