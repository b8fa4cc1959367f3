#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpbench/geometry.hpp"
#include "gpbench/synth.hpp"

using namespace gpbench;

TEST_CASE("bbox construction rejects bad inputs") {
  CHECK_THROWS_AS(BBox(0.5, 0.0, 0.4, 0.5), std::invalid_argument);  // x flipped
  CHECK_THROWS_AS(BBox(0.2, 0.2, 0.2, 0.5), std::invalid_argument);  // zero width
  CHECK_THROWS_AS(BBox(-0.1, 0.0, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(BBox(0.0, 0.0, 1.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(BBox(0.0, 0.0, std::nan(""), 0.5), std::invalid_argument);
  CHECK_NOTHROW(BBox(0.0, 0.0, 1.0, 1.0));
}

TEST_CASE("point construction rejects out-of-range") {
  CHECK_THROWS_AS(Point2D(-0.01, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(Point2D(0.5, 1.01), std::invalid_argument);
  CHECK_NOTHROW(Point2D(0.0, 1.0));
}

TEST_CASE("iou worked examples") {
  // identical boxes
  BBox a(0.1, 0.1, 0.3, 0.3);
  CHECK(iou(a, a) == doctest::Approx(1.0));

  // disjoint
  BBox b(0.5, 0.5, 0.7, 0.7);
  CHECK(iou(a, b) == doctest::Approx(0.0));

  // touching edges only: zero intersection area
  BBox c(0.3, 0.1, 0.5, 0.3);
  CHECK(iou(a, c) == doctest::Approx(0.0));

  // half-offset unit squares: inter 0.1*0.2, union 0.04+0.04-0.02
  BBox d(0.2, 0.1, 0.4, 0.3);
  CHECK(iou(a, d) == doctest::Approx(0.02 / 0.06));

  // hand-derived: boxes [0,0,0.2,0.2] and [0.1,0.1,0.3,0.3]
  // inter = 0.01, union = 0.04 + 0.04 - 0.01 = 0.07, iou = 1/7
  BBox e(0.0, 0.0, 0.2, 0.2);
  BBox f(0.1, 0.1, 0.3, 0.3);
  CHECK(iou(e, f) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));

  // containment: small box is a quarter of the big one
  BBox g(0.0, 0.0, 0.4, 0.4);
  BBox h(0.0, 0.0, 0.2, 0.2);
  CHECK(iou(g, h) == doctest::Approx(0.25));
}

TEST_CASE("iou exactly at a threshold value") {
  // [0,0,1,0.5] vs [0,0.25,1,0.75]: inter 0.25, union 0.75, iou = 1/3
  BBox a(0.0, 0.0, 1.0, 0.5);
  BBox b(0.0, 0.25, 1.0, 0.75);
  CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // [0,0,0.5,0.5] vs [0,0,0.5,0.25]: inter 0.125, union 0.25, exactly 0.5
  // (all values binary-exact, so equality is safe)
  BBox c(0.0, 0.0, 0.5, 0.5);
  BBox d(0.0, 0.0, 0.5, 0.25);
  CHECK(iou(c, d) == 0.5);
}

TEST_CASE("containment uses closed boundaries") {
  BBox r(0.2, 0.2, 0.6, 0.6);
  CHECK(contains(r, Point2D(0.2, 0.2)));   // corner
  CHECK(contains(r, Point2D(0.6, 0.4)));   // edge
  CHECK(contains(r, Point2D(0.4, 0.4)));   // interior
  CHECK_FALSE(contains(r, Point2D(0.61, 0.4)));
  CHECK_FALSE(contains(r, Point2D(0.4, 0.19)));
}

namespace {

BBox random_box(DetRng& rng) {
  const double x0 = rng.uniform(0.0, 0.8);
  const double y0 = rng.uniform(0.0, 0.8);
  const double w = rng.uniform(0.01, 1.0 - x0 - 1e-9);
  const double h = rng.uniform(0.01, 1.0 - y0 - 1e-9);
  return BBox(x0, y0, x0 + w, y0 + h);
}

}  // namespace

TEST_CASE("iou properties over random boxes") {
  DetRng rng(42);
  for (int i = 0; i < 2000; ++i) {
    BBox a = random_box(rng);
    BBox b = random_box(rng);
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(iou(b, a) == doctest::Approx(v).epsilon(1e-12));  // symmetry
    CHECK(iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("iou shrinks when one box moves away") {
  BBox a(0.1, 0.1, 0.4, 0.4);
  double prev = 1.0;
  for (double shift = 0.0; a.x_max + shift + 0.05 <= 1.0; shift += 0.05) {
    BBox moved(a.x_min + shift, a.y_min, a.x_max + shift, a.y_max);
    const double v = iou(a, moved);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}
