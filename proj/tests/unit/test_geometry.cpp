#include "doctest.h"
#include "helpers.hpp"
#include "sgrel/geometry.hpp"

using sgrel::BoundingBox;
using testsupport::Rng;

TEST_CASE("iou hand values") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(sgrel::iou(a, a) == doctest::Approx(1.0));
  CHECK(sgrel::iou(a, {20, 20, 5, 5}) == 0.0);
  // 5x10 overlap over 100 + 100 - 50.
  CHECK(sgrel::iou(a, {5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
  // Touching edges intersect with zero area.
  CHECK(sgrel::iou(a, {10, 0, 10, 10}) == 0.0);
  // Containment: 4 / 100.
  CHECK(sgrel::iou(a, {3, 3, 2, 2}) == doctest::Approx(4.0 / 100.0));
}

TEST_CASE("iou properties on random boxes") {
  Rng rng(101);
  for (int i = 0; i < 500; ++i) {
    const BoundingBox a{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(1, 30),
                        rng.uniform(1, 30)};
    const BoundingBox b{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(1, 30),
                        rng.uniform(1, 30)};
    const double v = sgrel::iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(sgrel::iou(b, a)));
    CHECK(v == doctest::Approx(testsupport::ref_iou(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("union box encloses both inputs") {
  Rng rng(102);
  for (int i = 0; i < 200; ++i) {
    const BoundingBox a{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(1, 30),
                        rng.uniform(1, 30)};
    const BoundingBox b{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(1, 30),
                        rng.uniform(1, 30)};
    const BoundingBox u = sgrel::union_box(a, b);
    CHECK(u.x <= std::min(a.x, b.x) + 1e-12);
    CHECK(u.y <= std::min(a.y, b.y) + 1e-12);
    CHECK(u.x2() >= std::max(a.x2(), b.x2()) - 1e-12);
    CHECK(u.y2() >= std::max(a.y2(), b.y2()) - 1e-12);
    // Smallest such box: corners coincide with the extreme corners.
    CHECK(u.x == doctest::Approx(std::min(a.x, b.x)));
    CHECK(u.y2() == doctest::Approx(std::max(a.y2(), b.y2())));
  }
}

TEST_CASE("degenerate boxes are invalid") {
  CHECK_FALSE(BoundingBox{0, 0, 0, 5}.valid());
  CHECK_FALSE(BoundingBox{0, 0, 5, -1}.valid());
  CHECK(BoundingBox{0, 0, 1e-9, 1e-9}.valid());
}
