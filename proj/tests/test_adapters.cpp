#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gpbench/adapters.hpp"
#include "gpbench/sha256.hpp"

using namespace gpbench;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
    std::remove(path.c_str());
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(Sha256::hash("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(Sha256::hash("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(Sha256::hash("The quick brown fox jumps over the lazy dog") ==
        "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
}

TEST_CASE("request hash separates fields unambiguously") {
  PlanRequest a, b;
  a.prompt = "xy";
  a.image_ref = "z";
  b.prompt = "x";
  b.image_ref = "yz";
  CHECK(request_hash("id", a) != request_hash("id", b));
  CHECK(request_hash("id", a) != request_hash("other", a));
  a.seed = 1;
  PlanRequest c = a;
  CHECK(request_hash("id", a) == request_hash("id", c));
  c.seed = 2;
  CHECK(request_hash("id", a) != request_hash("id", c));
}

TEST_CASE("replay planner returns scripted text verbatim") {
  ReplayPlanner planner;
  planner.script("ep1", "grasp(\"cup\", [1, 2, 3, 4])\nsome trailing text");
  PlanRequest req;
  req.key = "ep1";
  CHECK(planner.generate(req) == "grasp(\"cup\", [1, 2, 3, 4])\nsome trailing text");
  req.key = "missing";
  CHECK_THROWS_AS(planner.generate(req), BackendError);
  planner.set_default("fallback");
  CHECK(planner.generate(req) == "fallback");
  CHECK(planner.calls() == 3);
}

TEST_CASE("cache hit issues no backend call") {
  TempFile tmp("gpbench-cache-test.jsonl");
  auto cache = std::make_shared<RequestCache>(tmp.path);
  auto inner = std::make_shared<ReplayPlanner>();
  inner->set_default("response-text");
  CachingPlanner cached(inner, cache);

  PlanRequest req;
  req.prompt = "p";
  CHECK(cached.generate(req) == "response-text");
  CHECK(cached.backend_calls() == 1);
  CHECK(cached.cache_hits() == 0);

  CHECK(cached.generate(req) == "response-text");
  CHECK(cached.backend_calls() == 1);  // unchanged
  CHECK(cached.cache_hits() == 1);
  CHECK(cached.last_latency_ms() == 0);

  // a fresh cache instance reloads from disk
  auto cache2 = std::make_shared<RequestCache>(tmp.path);
  CachingPlanner cached2(inner, cache2);
  CHECK(cached2.generate(req) == "response-text");
  CHECK(cached2.cache_hits() == 1);
  CHECK(cached2.backend_calls() == 0);
}

TEST_CASE("cache survives a torn tail") {
  TempFile tmp("gpbench-cache-torn.jsonl");
  {
    RequestCache cache(tmp.path);
    cache.store("h1", "r1", 0);
  }
  std::ofstream(tmp.path, std::ios::app) << "{\"hash\": \"h2\", \"resp";
  RequestCache cache(tmp.path);
  CHECK(cache.lookup("h1") == "r1");
  CHECK_FALSE(cache.lookup("h2").has_value());
}

TEST_CASE("retry recovers from transient faults") {
  std::atomic<int> attempts{0};
  auto flaky = std::make_shared<FunctionPlanner>(
      "flaky", [&](const PlanRequest& req) -> std::string {
        if (++attempts < 3)
          throw BackendError("transient", request_hash("flaky", req));
        return "ok";
      });
  RetryPolicy fast{3, 1, 1.0};
  CachingPlanner planner(flaky, nullptr, fast);
  PlanRequest req;
  CHECK(planner.generate(req) == "ok");
  CHECK(attempts == 3);

  attempts = -10;  // needs 13 attempts, budget is 3
  CHECK_THROWS_AS(planner.generate(req), BackendError);
}

TEST_CASE("prompt template substitution") {
  CHECK(render_prompt("see {I}, do {H}; again {H}", "img.ppm", "tidy up") ==
        "see img.ppm, do tidy up; again tidy up");
  CHECK(render_prompt("no placeholders", "x", "y") == "no placeholders");
}

TEST_CASE("step extraction from model prose") {
  const std::string raw =
      "Here is my plan:\n"
      "1. grasp the cup\n"
      "2) place it on the tray\n"
      "- open the drawer\n"
      "* close the drawer\n"
      "That completes the task.\n";
  auto steps = extract_steps(raw);
  REQUIRE(steps.size() == 4);
  CHECK(steps[0] == "grasp the cup");
  CHECK(steps[1] == "place it on the tray");
  CHECK(steps[2] == "open the drawer");
  CHECK(steps[3] == "close the drawer");
  CHECK(extract_steps("no list here").empty());
}

TEST_CASE("step classification keywords") {
  CHECK(classify_step("grasp the red cup") == Primitive::Grasp);
  CHECK(classify_step("Pick up the sock") == Primitive::Grasp);
  CHECK(classify_step("place it on the tray") == Primitive::Place);
  CHECK(classify_step("put the book on the shelf") == Primitive::Place);
  CHECK(classify_step("open the drawer") == Primitive::Open);
  CHECK(classify_step("close the cabinet door") == Primitive::Close);
  CHECK_FALSE(classify_step("wave at the camera").has_value());
  // substring inside a word does not count
  CHECK_FALSE(classify_step("the closet is graspable-ish").has_value());
}

TEST_CASE("object phrase extraction") {
  CHECK(step_object_phrase("grasp the red cup") == "red cup");
  CHECK(step_object_phrase("place it on the tray.") == "tray");
  CHECK(step_object_phrase("open a drawer") == "drawer");
  CHECK(step_object_phrase("pick up the sock") == "sock");
}

TEST_CASE("grounding a step picks the best detection above the floor") {
  MockGrounder grounder;
  grounder.script_detections(
      "red cup", {{BBox(0.1, 0.1, 0.2, 0.2), 0.6}, {BBox(0.5, 0.5, 0.6, 0.6), 0.9}});
  grounder.script_detections("ghost", {{BBox(0.3, 0.3, 0.4, 0.4), 0.1}});
  grounder.script_point("tray", Point2D(0.7, 0.8));

  GroundedStep g = ground_language_step(grounder, "img", "grasp the red cup");
  REQUIRE(g.grounded());
  CHECK(*g.action->bbox() == BBox(0.5, 0.5, 0.6, 0.6));

  GroundedStep p = ground_language_step(grounder, "img", "place it on the tray");
  REQUIRE(p.grounded());
  CHECK(*p.action->point() == Point2D(0.7, 0.8));

  // below the score floor: ungroundable
  GroundedStep u = ground_language_step(grounder, "img", "grasp the ghost");
  CHECK(u.primitive == Primitive::Grasp);
  CHECK_FALSE(u.grounded());

  // unknown phrase: no detections at all
  CHECK_FALSE(ground_language_step(grounder, "img", "open the hatch").grounded());
}

TEST_CASE("units from grounded steps preserve pairing and failures") {
  auto grounded = [](Primitive p, double x) {
    GroundedStep s;
    s.primitive = p;
    if (p == Primitive::Place)
      s.action = GroundedAction{p, "t", Point2D(x, 0.5)};
    else
      s.action = GroundedAction{p, "t", BBox(x, 0.1, x + 0.1, 0.2)};
    return s;
  };
  auto ungrounded = [](std::optional<Primitive> p) {
    GroundedStep s;
    s.primitive = p;
    return s;
  };

  SUBCASE("clean sequence") {
    auto units = units_from_grounded_steps(
        {grounded(Primitive::Open, 0.1), grounded(Primitive::Grasp, 0.3),
         grounded(Primitive::Place, 0.5), grounded(Primitive::Close, 0.1)});
    REQUIRE(units.size() == 3);
    CHECK(units[0].is_articulation());
    CHECK(units[1].is_manipulation());
    CHECK(units[2].is_articulation());
  }
  SUBCASE("ungroundable grasp poisons its pair") {
    auto units = units_from_grounded_steps(
        {ungrounded(Primitive::Grasp), grounded(Primitive::Place, 0.5)});
    REQUIRE(units.size() == 1);
    CHECK(units[0].is_malformed());
  }
  SUBCASE("unclassifiable step becomes its own failed unit") {
    auto units = units_from_grounded_steps(
        {ungrounded(std::nullopt), grounded(Primitive::Open, 0.1)});
    REQUIRE(units.size() == 2);
    CHECK(units[0].is_malformed());
    CHECK(units[1].is_articulation());
  }
  SUBCASE("orphaned place fails alone") {
    auto units = units_from_grounded_steps({grounded(Primitive::Place, 0.5)});
    REQUIRE(units.size() == 1);
    CHECK(units[0].is_malformed());
  }
}

TEST_CASE("som marks sort by reading order") {
  std::vector<BBox> proposals = {BBox(0.5, 0.5, 0.6, 0.6),
                                 BBox(0.1, 0.1, 0.2, 0.2),
                                 BBox(0.7, 0.1, 0.8, 0.2)};
  auto marks = som_marks(proposals);
  REQUIRE(marks.size() == 3);
  CHECK(marks[0].id == 1);
  CHECK(marks[0].box == BBox(0.1, 0.1, 0.2, 0.2));  // topmost-leftmost
  CHECK(marks[1].box == BBox(0.7, 0.1, 0.8, 0.2));
  CHECK(marks[2].box == BBox(0.5, 0.5, 0.6, 0.6));
  CHECK_THROWS_AS(som_marks({}), std::invalid_argument);
}

TEST_CASE("som response resolution") {
  auto marks = som_marks({BBox(0.1, 0.1, 0.2, 0.2), BBox(0.5, 0.5, 0.7, 0.7)});
  const std::string response =
      "1. grasp the object at mark 1\n"
      "2. place it on mark 2\n"
      "3. polish mark 1\n"        // unknown primitive: skipped
      "4. open thing at mark 9\n";  // unknown mark: skipped
  PredictedPlan plan = resolve_som_response(response, marks);
  REQUIRE(plan.actions.size() == 2);
  CHECK(plan.actions[0].primitive == Primitive::Grasp);
  CHECK(*plan.actions[0].bbox() == BBox(0.1, 0.1, 0.2, 0.2));
  CHECK(plan.actions[1].primitive == Primitive::Place);
  CHECK(plan.actions[1].point()->x == doctest::Approx(0.6));
  CHECK(plan.actions[1].point()->y == doctest::Approx(0.6));
}
