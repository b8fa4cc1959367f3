#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpbench {

// Axis-aligned box in normalized image coordinates. Degenerate (zero-area)
// boxes are rejected at construction.
struct BBox {
  double x_min, y_min, x_max, y_max;

  BBox(double x0, double y0, double x1, double y1)
      : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
    if (!(std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) &&
          std::isfinite(y1)))
      throw std::invalid_argument("BBox: non-finite coordinate");
    if (!(0.0 <= x0 && x0 < x1 && x1 <= 1.0))
      throw std::invalid_argument("BBox: x_min < x_max in [0,1] violated");
    if (!(0.0 <= y0 && y0 < y1 && y1 <= 1.0))
      throw std::invalid_argument("BBox: y_min < y_max in [0,1] violated");
  }

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  bool operator==(const BBox&) const = default;
};

struct Point2D {
  double x, y;

  Point2D(double px, double py) : x(px), y(py) {
    if (!(std::isfinite(px) && std::isfinite(py)))
      throw std::invalid_argument("Point2D: non-finite coordinate");
    if (!(0.0 <= px && px <= 1.0 && 0.0 <= py && py <= 1.0))
      throw std::invalid_argument("Point2D: coordinate outside [0,1]");
  }

  bool operator==(const Point2D&) const = default;
};

inline double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(
      0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(
      0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

// Closed-boundary containment: points on the box edge count as inside.
inline bool contains(const BBox& region, const Point2D& p) {
  return region.x_min <= p.x && p.x <= region.x_max &&
         region.y_min <= p.y && p.y <= region.y_max;
}

}  // namespace gpbench
