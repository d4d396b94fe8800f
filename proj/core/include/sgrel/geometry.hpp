#pragma once

#include <cmath>

namespace sgrel {

/// Axis-aligned box, top-left (x, y) plus extents, in pixel units.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double x2() const { return x + w; }
  double y2() const { return y + h; }

  bool valid() const {
    return w > 0.0 && h > 0.0 && std::isfinite(x) && std::isfinite(y) &&
           std::isfinite(w) && std::isfinite(h);
  }
};

/// Intersection over union; 0 for disjoint boxes, 1 for identical ones.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Smallest box enclosing both inputs (the "phrase" box of a subject/object pair).
BoundingBox union_box(const BoundingBox& a, const BoundingBox& b);

}  // namespace sgrel
