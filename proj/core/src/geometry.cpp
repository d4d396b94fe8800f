#include "sgrel/geometry.hpp"

#include <algorithm>

namespace sgrel {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix1 = std::max(a.x, b.x);
  const double iy1 = std::max(a.y, b.y);
  const double ix2 = std::min(a.x2(), b.x2());
  const double iy2 = std::min(a.y2(), b.y2());
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

BoundingBox union_box(const BoundingBox& a, const BoundingBox& b) {
  const double x1 = std::min(a.x, b.x);
  const double y1 = std::min(a.y, b.y);
  const double x2 = std::max(a.x2(), b.x2());
  const double y2 = std::max(a.y2(), b.y2());
  return BoundingBox{x1, y1, x2 - x1, y2 - y1};
}

}  // namespace sgrel
