#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpbench/plan_dsl.hpp"
#include "gpbench/synth.hpp"

using namespace gpbench;

TEST_CASE("call-style pixel coordinates") {
  auto r = parse_plan(
      "grasp(\"red cup\", [64, 48, 128, 96])\n"
      "place(\"tray\", [320, 240])\n",
      640, 480);
  CHECK(r.diagnostics.empty());
  REQUIRE(r.plan.actions.size() == 2);
  const BBox* b = r.plan.actions[0].bbox();
  REQUIRE(b != nullptr);
  CHECK(b->x_min == doctest::Approx(0.1));
  CHECK(b->y_min == doctest::Approx(0.1));
  CHECK(b->x_max == doctest::Approx(0.2));
  CHECK(b->y_max == doctest::Approx(0.2));
  const Point2D* p = r.plan.actions[1].point();
  REQUIRE(p != nullptr);
  CHECK(p->x == doctest::Approx(0.5));
  CHECK(p->y == doctest::Approx(0.5));
  CHECK(r.plan.actions[0].target_text == "red cup");
}

TEST_CASE("normalized coordinates pass through") {
  auto r = parse_plan("open('door', [0.1, 0.2, 0.5, 0.9])", 640, 480);
  CHECK(r.diagnostics.empty());
  REQUIRE(r.plan.actions.size() == 1);
  CHECK(*r.plan.actions[0].bbox() == BBox(0.1, 0.2, 0.5, 0.9));
}

TEST_CASE("all-integer small coordinates are pixels, not normalized") {
  // [0, 0, 1, 1] with integer slots means a 1x1-pixel box at the origin.
  auto r = parse_plan("grasp(\"dot\", [0, 0, 1, 1])", 100, 100);
  REQUIRE(r.plan.actions.size() == 1);
  CHECK(r.plan.actions[0].bbox()->x_max == doctest::Approx(0.01));
}

TEST_CASE("embedded json object array") {
  const std::string text =
      "Sure, here is the plan:\n"
      "```json\n"
      "[{\"action\": \"grasp\", \"target\": \"cup\", \"bbox\": [64, 48, 128, 96]},\n"
      " {\"action\": \"place\", \"target\": \"tray\", \"point\": [320, 240]}]\n"
      "```\n";
  auto r = parse_plan(text, 640, 480);
  CHECK(r.diagnostics.empty());
  REQUIRE(r.plan.actions.size() == 2);
  CHECK(r.plan.actions[0].primitive == Primitive::Grasp);
  CHECK(r.plan.actions[1].primitive == Primitive::Place);
  CHECK(r.plan.actions[1].point()->x == doctest::Approx(0.5));
}

TEST_CASE("json array with a bad element keeps the good ones") {
  const std::string text =
      "[{\"action\": \"grasp\", \"target\": \"cup\", \"bbox\": [10,10,20,20]},"
      " {\"action\": \"teleport\", \"bbox\": [0,0,5,5]}]";
  auto r = parse_plan(text, 100, 100);
  CHECK(r.plan.actions.size() == 1);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].severity == Severity::Error);
  CHECK(r.diagnostics[0].line_index == 1);  // element index in array mode
}

TEST_CASE("empty input yields one warning and no actions") {
  for (const char* text : {"", "   \n\t  \n"}) {
    auto r = parse_plan(text, 640, 480);
    CHECK(r.plan.actions.empty());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].severity == Severity::Warning);
  }
}

TEST_CASE("slightly out-of-range coordinates clamp with a warning") {
  auto r = parse_plan("grasp(\"cup\", [-0.02, 0.1, 0.5, 1.03])", 640, 480);
  REQUIRE(r.plan.actions.size() == 1);
  CHECK(r.plan.actions[0].bbox()->x_min == 0.0);
  CHECK(r.plan.actions[0].bbox()->y_max == 1.0);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].severity == Severity::Warning);
  CHECK_FALSE(r.has_errors());
}

TEST_CASE("far out-of-range coordinates drop the action with an error") {
  auto r = parse_plan("grasp(\"cup\", [0.1, 0.1, 1.5, 0.5])", 640, 480);
  CHECK(r.plan.actions.empty());
  CHECK(r.has_errors());
}

TEST_CASE("wrong arity is an error") {
  auto r = parse_plan(
      "grasp(\"cup\", [0.1, 0.1, 0.5])\n"
      "place(\"tray\", [0.5, 0.5, 0.6, 0.6])\n",
      640, 480);
  CHECK(r.plan.actions.empty());
  CHECK(r.diagnostics.size() == 2);
  CHECK(r.has_errors());
}

TEST_CASE("degenerate boxes are dropped") {
  auto r = parse_plan("grasp(\"cup\", [0.5, 0.1, 0.5, 0.2])", 640, 480);
  CHECK(r.plan.actions.empty());
  CHECK(r.has_errors());
}

TEST_CASE("empty target becomes unknown with a warning") {
  auto r = parse_plan("grasp(\"\", [0.1, 0.1, 0.2, 0.2])", 640, 480);
  REQUIRE(r.plan.actions.size() == 1);
  CHECK(r.plan.actions[0].target_text == "unknown");
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].severity == Severity::Warning);
}

TEST_CASE("unparseable lines are reported with line numbers") {
  auto r = parse_plan(
      "step one: do stuff\n"
      "grasp(\"cup\", [64, 48, 128, 96])\n",
      640, 480);
  CHECK(r.plan.actions.size() == 1);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].line_index == 0);
  CHECK(r.diagnostics[0].severity == Severity::Error);
}

TEST_CASE("serialize then parse round-trips within half a pixel") {
  DetRng rng(7);
  const int w = 640, h = 480;
  for (int trial = 0; trial < 1000; ++trial) {
    PredictedPlan plan;
    const int n = 1 + static_cast<int>(rng.index(6));
    for (int i = 0; i < n; ++i) {
      const double roll = rng.uniform();
      if (roll < 0.5) {
        const double x0 = rng.uniform(0.0, 0.7), y0 = rng.uniform(0.0, 0.7);
        plan.actions.push_back(
            {Primitive::Grasp, "obj",
             BBox(x0, y0, x0 + rng.uniform(0.05, 0.3), y0 + rng.uniform(0.05, 0.3))});
        plan.actions.push_back(
            {Primitive::Place, "dst",
             Point2D(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0))});
      } else {
        const double x0 = rng.uniform(0.0, 0.7), y0 = rng.uniform(0.0, 0.7);
        plan.actions.push_back(
            {roll < 0.75 ? Primitive::Open : Primitive::Close, "fixture",
             BBox(x0, y0, x0 + rng.uniform(0.05, 0.3), y0 + rng.uniform(0.05, 0.3))});
      }
    }
    const std::string text = serialize_plan(plan, w, h);
    auto r = parse_plan(text, w, h);
    CHECK(r.diagnostics.empty());
    REQUIRE(r.plan.actions.size() == plan.actions.size());
    for (std::size_t i = 0; i < plan.actions.size(); ++i) {
      const GroundedAction& a = plan.actions[i];
      const GroundedAction& b = r.plan.actions[i];
      CHECK(a.primitive == b.primitive);
      if (const BBox* ab = a.bbox()) {
        const BBox* bb = b.bbox();
        REQUIRE(bb != nullptr);
        CHECK(std::abs(ab->x_min - bb->x_min) <= 0.5 / w + 1e-12);
        CHECK(std::abs(ab->x_max - bb->x_max) <= 0.5 / w + 1e-12);
        CHECK(std::abs(ab->y_min - bb->y_min) <= 0.5 / h + 1e-12);
        CHECK(std::abs(ab->y_max - bb->y_max) <= 0.5 / h + 1e-12);
      } else {
        const Point2D* bp = b.point();
        REQUIRE(bp != nullptr);
        CHECK(std::abs(a.point()->x - bp->x) <= 0.5 / w + 1e-12);
        CHECK(std::abs(a.point()->y - bp->y) <= 0.5 / h + 1e-12);
      }
    }
  }
}

TEST_CASE("parser never throws on arbitrary input") {
  DetRng rng(99);
  const std::string alphabet =
      "grasp place open close [](){}\",'0123456789.,-eE \n\t{}:abc";
  for (int trial = 0; trial < 10000; ++trial) {
    std::string s;
    const std::size_t len = rng.index(120);
    for (std::size_t i = 0; i < len; ++i)
      s.push_back(alphabet[rng.index(alphabet.size())]);
    CHECK_NOTHROW(parse_plan(s, 640, 480));
  }
}
