#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gpbench/geometry.hpp"

namespace gpbench {

enum class Primitive { Open, Close, Grasp, Place };

const char* primitive_name(Primitive p);
std::optional<Primitive> parse_primitive(const std::string& s);

using Grounding = std::variant<BBox, Point2D>;

// One primitive with its spatial target. Predicted place carries a point;
// GT place carries the destination region as a box.
struct GroundedAction {
  Primitive primitive;
  std::string target_text;
  Grounding grounding;

  const BBox* bbox() const { return std::get_if<BBox>(&grounding); }
  const Point2D* point() const { return std::get_if<Point2D>(&grounding); }
};

// Scoring granule: a fused grasp-place pair, a standalone open/close, or a
// malformed leftover (orphaned grasp/place) that can never succeed.
struct AtomicUnit {
  struct Manipulation {
    GroundedAction grasp;
    GroundedAction place;
  };
  struct Articulation {
    GroundedAction action;
  };
  struct Malformed {
    std::vector<GroundedAction> actions;
  };

  std::variant<Manipulation, Articulation, Malformed> value;

  bool is_manipulation() const {
    return std::holds_alternative<Manipulation>(value);
  }
  bool is_articulation() const {
    return std::holds_alternative<Articulation>(value);
  }
  bool is_malformed() const { return std::holds_alternative<Malformed>(value); }

  const Manipulation& manipulation() const {
    return std::get<Manipulation>(value);
  }
  const Articulation& articulation() const {
    return std::get<Articulation>(value);
  }
};

// Left-to-right scan: grasp immediately followed by place fuses into a
// manipulation unit; open/close stand alone; orphaned grasps/places become
// malformed units rather than errors so broken plans stay scoreable.
std::vector<AtomicUnit> pair_atomic_units(
    const std::vector<GroundedAction>& actions);

struct PredictedPlan {
  std::vector<GroundedAction> actions;

  std::vector<AtomicUnit> units() const { return pair_atomic_units(actions); }
};

struct GtBlock {
  std::vector<AtomicUnit> units;
  bool unordered = false;
};

struct GtPlan {
  std::vector<GtBlock> blocks;

  std::size_t unit_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.units.size();
    return n;
  }
  std::vector<AtomicUnit> flattened() const {
    std::vector<AtomicUnit> out;
    for (const auto& b : blocks)
      out.insert(out.end(), b.units.begin(), b.units.end());
    return out;
  }
};

enum class HorizonBucket { Short, Medium, Long };

const char* bucket_name(HorizonBucket b);

// 1-4 Short, 5-8 Medium, 9-26 Long; anything else is a domain error.
HorizonBucket bucket_for(std::size_t n_units);

struct Episode {
  std::string id;
  std::string image_ref;
  int image_width = 0;
  int image_height = 0;
  std::string explicit_instruction;
  std::string implicit_instruction;
  GtPlan gt_plan;
  std::map<std::string, std::string> source_meta;

  HorizonBucket bucket() const { return bucket_for(gt_plan.unit_count()); }
};

// Converts a GT plan into the predicted plan a perfect planner would emit:
// same grasp/open/close boxes, place points at the GT region centers.
PredictedPlan gt_as_prediction(const GtPlan& gt);

}  // namespace gpbench
