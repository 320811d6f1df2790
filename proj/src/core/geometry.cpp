#include "trackanno/core/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "trackanno/core/error.hpp"

namespace trackanno {

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 && h > 0.0;
}

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) {
  const double x0 = std::max(a.x, b.x);
  const double y0 = std::max(a.y, b.y);
  const double x1 = std::min(a.right(), b.right());
  const double y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!a.valid() || !b.valid()) throw InvalidArgument("iou: degenerate box");
  const auto inter = intersect(a, b);
  if (!inter) return 0.0;
  const double i = inter->area();
  const double u = a.area() + b.area() - i;
  return std::clamp(i / u, 0.0, 1.0);
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace trackanno
