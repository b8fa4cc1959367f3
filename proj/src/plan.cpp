#include "gpbench/plan.hpp"

namespace gpbench {

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::Open: return "open";
    case Primitive::Close: return "close";
    case Primitive::Grasp: return "grasp";
    case Primitive::Place: return "place";
  }
  return "?";
}

std::optional<Primitive> parse_primitive(const std::string& s) {
  if (s == "open") return Primitive::Open;
  if (s == "close") return Primitive::Close;
  if (s == "grasp") return Primitive::Grasp;
  if (s == "place") return Primitive::Place;
  return std::nullopt;
}

std::vector<AtomicUnit> pair_atomic_units(
    const std::vector<GroundedAction>& actions) {
  std::vector<AtomicUnit> out;
  std::size_t i = 0;
  while (i < actions.size()) {
    const GroundedAction& a = actions[i];
    switch (a.primitive) {
      case Primitive::Open:
      case Primitive::Close:
        out.push_back({AtomicUnit::Articulation{a}});
        ++i;
        break;
      case Primitive::Grasp:
        if (i + 1 < actions.size() &&
            actions[i + 1].primitive == Primitive::Place) {
          out.push_back({AtomicUnit::Manipulation{a, actions[i + 1]}});
          i += 2;
        } else {
          out.push_back({AtomicUnit::Malformed{{a}}});  // orphaned grasp
          ++i;
        }
        break;
      case Primitive::Place:
        out.push_back({AtomicUnit::Malformed{{a}}});  // place with no grasp
        ++i;
        break;
    }
  }
  return out;
}

const char* bucket_name(HorizonBucket b) {
  switch (b) {
    case HorizonBucket::Short: return "short";
    case HorizonBucket::Medium: return "medium";
    case HorizonBucket::Long: return "long";
  }
  return "?";
}

HorizonBucket bucket_for(std::size_t n_units) {
  if (n_units >= 1 && n_units <= 4) return HorizonBucket::Short;
  if (n_units >= 5 && n_units <= 8) return HorizonBucket::Medium;
  if (n_units >= 9 && n_units <= 26) return HorizonBucket::Long;
  throw std::domain_error("bucket_for: unit count outside 1..26");
}

PredictedPlan gt_as_prediction(const GtPlan& gt) {
  PredictedPlan plan;
  for (const AtomicUnit& u : gt.flattened()) {
    if (u.is_manipulation()) {
      const auto& m = u.manipulation();
      plan.actions.push_back(m.grasp);
      const BBox* region = m.place.bbox();
      GroundedAction place = m.place;
      place.grounding = Point2D(region->center_x(), region->center_y());
      plan.actions.push_back(place);
    } else if (u.is_articulation()) {
      plan.actions.push_back(u.articulation().action);
    }
  }
  return plan;
}

}  // namespace gpbench
