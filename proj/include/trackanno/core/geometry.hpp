#pragma once

#include <compare>
#include <optional>

namespace trackanno {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box in pixel space: top-left corner plus size.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  Point center() const { return {x + 0.5 * w, y + 0.5 * h}; }

  /// Finite coordinates and strictly positive size.
  bool valid() const;

  static BoundingBox from_center(Point c, double w, double h) {
    return {c.x - 0.5 * w, c.y - 0.5 * h, w, h};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
  friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection of two boxes, or nullopt when they do not overlap.
std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b);

/// Intersection over union. Throws InvalidArgument for degenerate boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

double distance(Point a, Point b);

}  // namespace trackanno
